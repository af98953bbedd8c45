"""Command line runner: ``hvlasov run <config>``, ``hvlasov check``, ``hvlasov info <snapshot>``."""

import argparse
import csv
import json
import os
import sys

from ..errors import InvalidArgument
from ..phasefield import read_snapshot_header
from .config import ConfigError, ExperimentConfig, KINDS, load_config, validate
from .experiments import ExperimentResult, run_experiment

REPORT_SCHEMA = "hvlasov-report/1"


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, result: ExperimentResult):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(result.columns)
        for row in result.rows:
            w.writerow([_fmt(row[c]) for c in result.columns])


def build_report(cfg: ExperimentConfig, result: ExperimentResult):
    return {
        "schema": REPORT_SCHEMA,
        "experiment": result.kind,
        "passed": result.passed,
        "assertions": [a.as_dict() for a in result.assertions],
        "metrics": result.metrics,
        "rows": len(result.rows),
        "timings_s": {k: round(v, 3) for k, v in result.timings.items()},
        "config": cfg.echo(),
    }


def run(cfg: ExperimentConfig, out_dir=None, stream=None):
    """Run one experiment, write ``<kind>.csv`` and ``<kind>.json``; return the report."""
    out_dir = out_dir or cfg.out
    stream = stream or sys.stdout
    os.makedirs(out_dir, exist_ok=True)
    result = run_experiment(cfg)
    write_csv(os.path.join(out_dir, f"{cfg.kind}.csv"), result)
    report = build_report(cfg, result)
    with open(os.path.join(out_dir, f"{cfg.kind}.json"), "w") as fh:
        json.dump(report, fh, indent=2, default=str)
        fh.write("\n")
    for a in result.assertions:
        flag = "PASS" if a.passed else "FAIL"
        print(f"[{flag}] {a.name}: {a.value:.6g} (limit {a.limit:.6g})  {a.checks}", file=stream)
    return report


def _add_common(p, default):
    p.add_argument("--config", default=default,
                   help="experiment config file (alternative to the positional one)")
    p.add_argument("--out", default=default, help="output directory")
    p.add_argument("--seed", type=int, default=default,
                   help="override the config seed (unsigned 64-bit)")
    p.add_argument("--threads", type=int, default=default,
                   help="worker processes for Monte Carlo sampling")


def _parser():
    p = argparse.ArgumentParser(prog="hvlasov", description=__doc__)
    _add_common(p, None)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config_path", nargs="?")
    c = sub.add_parser("check", help="run the built-in identity suite")
    i = sub.add_parser("info", help="print the header of a binary snapshot")
    i.add_argument("snapshot")
    for sp in (r, c, i):
        # flags are accepted before or after the subcommand
        _add_common(sp, argparse.SUPPRESS)
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "info":
            print(json.dumps(read_snapshot_header(args.snapshot), indent=2))
            return 0
        if args.command == "check":
            cfg = validate(ExperimentConfig(kind="identity-suite"))
        else:
            path = args.config_path or args.config
            if path is None:
                raise ConfigError("run needs a config file")
            cfg = load_config(path)
        cfg = cfg.with_overrides(seed=args.seed, threads=args.threads, out=args.out)
        report = run(cfg)
    except (ConfigError, InvalidArgument, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0 if report["passed"] else 1


__all__ = ["KINDS", "ExperimentConfig", "load_config", "main", "run", "write_csv"]
