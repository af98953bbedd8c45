"""Experiment configuration read from INI files.

A config file has an ``[experiment]`` section naming the kind and optional
``[potential]``, ``[grid]``, ``[solver]``, ``[manybody]`` and ``[audit]``
sections.  Unknown keys are errors, so typos never go unnoticed.
"""

import configparser
from dataclasses import asdict, dataclass, fields, replace
import math

from ..errors import InvalidArgument
from ..potential import PotentialSpec

KINDS = ("identity-suite", "diagram-closure", "bounds-audit", "beta-derivative", "mf-convergence")


class ConfigError(InvalidArgument):
    """Invalid configuration value; the message starts with ``section.key``."""


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    out: str = "results"
    # potential
    potential: str = "cosine"
    amplitude: float = 1.0
    wavenumber: float = 1.0
    width: float = 1.0
    # grid and solvers
    n: int = 64
    T: float = 1.0
    dt: float = 5e-3
    picard_tol: float = 1e-10
    picard_window: float = None
    # many-body and counting
    N_list: tuple = (4, 8, 16)
    lam: float = 0.5
    t: float = 0.5
    samples: int = 200
    z1_grid: int = 32
    times: tuple = (0.1, 0.2, 0.3, 0.4, 0.5)
    # algebra and audits
    D: int = 3
    N: int = 4
    seeds: int = 100
    trials: int = 50
    tolerance: float = 1e-10
    threads: int = 1

    def spec(self) -> PotentialSpec:
        if self.potential == "zero":
            return PotentialSpec.zero()
        if self.potential == "cosine":
            return PotentialSpec.cosine(self.amplitude, self.wavenumber)
        return PotentialSpec.gaussian(self.amplitude, self.width)

    def echo(self):
        out = asdict(self)
        out["N_list"] = list(self.N_list)
        out["times"] = list(self.times)
        return out

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        validate(cfg)
        return cfg


# (section, key) -> (attribute, parser)
def _int_list(s):
    return tuple(int(p) for p in s.replace(",", " ").split())


def _float_list(s):
    return tuple(float(p) for p in s.replace(",", " ").split())


def _opt_float(s):
    return None if s.strip().lower() in ("", "none") else float(s)


_KEYS = {
    ("experiment", "kind"): ("kind", str),
    ("experiment", "seed"): ("seed", int),
    ("experiment", "out"): ("out", str),
    ("potential", "kind"): ("potential", str),
    ("potential", "amplitude"): ("amplitude", float),
    ("potential", "wavenumber"): ("wavenumber", float),
    ("potential", "width"): ("width", float),
    ("grid", "n"): ("n", int),
    ("solver", "t_final"): ("T", float),
    ("solver", "dt"): ("dt", float),
    ("solver", "picard_tol"): ("picard_tol", float),
    ("solver", "picard_window"): ("picard_window", _opt_float),
    ("manybody", "n_list"): ("N_list", _int_list),
    ("manybody", "lambda"): ("lam", float),
    ("manybody", "t"): ("t", float),
    ("manybody", "samples"): ("samples", int),
    ("manybody", "z1_grid"): ("z1_grid", int),
    ("manybody", "times"): ("times", _float_list),
    ("audit", "d"): ("D", int),
    ("audit", "n"): ("N", int),
    ("audit", "seeds"): ("seeds", int),
    ("audit", "trials"): ("trials", int),
    ("audit", "tolerance"): ("tolerance", float),
}
_PATH = {attr: f"{sec}.{key}" for (sec, key), (attr, _) in _KEYS.items()}


def _fail(attr, msg):
    raise ConfigError(f"{_PATH.get(attr, attr)}: {msg}")


def _pow2(n):
    return n >= 8 and n & (n - 1) == 0


def validate(cfg: ExperimentConfig):
    if cfg.kind not in KINDS:
        _fail("kind", f"must be one of {', '.join(KINDS)}, got {cfg.kind!r}")
    if cfg.potential not in ("zero", "cosine", "gaussian"):
        _fail("potential", f"unknown potential kind {cfg.potential!r}")
    if not 0 <= cfg.seed < 2**64:
        _fail("seed", "must be an unsigned 64-bit integer")
    if not _pow2(cfg.n):
        _fail("n", f"must be a power of two >= 8, got {cfg.n}")
    if not _pow2(cfg.z1_grid):
        _fail("z1_grid", f"must be a power of two >= 8, got {cfg.z1_grid}")
    for attr in ("T", "dt", "picard_tol", "tolerance"):
        v = getattr(cfg, attr)
        if not (math.isfinite(v) and v > 0):
            _fail(attr, f"must be positive, got {v}")
    if cfg.dt > cfg.T:
        _fail("dt", "must not exceed the final time")
    if not 0 <= cfg.lam <= 1:
        _fail("lam", f"must lie in [0, 1], got {cfg.lam}")
    if not cfg.N_list or any(N < 2 for N in cfg.N_list):
        _fail("N_list", "needs particle counts >= 2")
    if cfg.samples < 2:
        _fail("samples", "needs at least two samples")
    if cfg.kind == "beta-derivative" and (not cfg.times or min(cfg.times) < 2 * cfg.dt):
        _fail("times", "needs times of at least two steps")
    if cfg.kind == "mf-convergence" and not cfg.t > 0:
        _fail("t", "must be positive")
    if cfg.D < 2 or cfg.N < 2 or cfg.D**cfg.N > 4096:
        _fail("D", "need D, N >= 2 and D^N <= 4096")
    if cfg.seeds < 1 or cfg.trials < 1:
        _fail("seeds", "seeds and trials must be positive")
    if cfg.threads < 1:
        _fail("threads", "must be positive")
    return cfg


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str.lower
    with open(path) as fh:
        parser.read_file(fh)
    values = {}
    for sec in parser.sections():
        for key, raw in parser.items(sec):
            if (sec, key) not in _KEYS:
                raise ConfigError(f"{sec}.{key}: unknown key")
            attr, conv = _KEYS[(sec, key)]
            try:
                values[attr] = conv(raw)
            except ValueError:
                raise ConfigError(f"{sec}.{key}: cannot parse {raw!r}") from None
    if "kind" not in values:
        raise ConfigError("experiment.kind: missing")
    return validate(ExperimentConfig(**values))


def config_fields():
    return [f.name for f in fields(ExperimentConfig)]
