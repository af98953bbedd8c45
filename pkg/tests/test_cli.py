import json
import subprocess
import sys

import numpy as np
import pytest

from hvlasov import PhaseGrid, random_state
from hvlasov.cli import REPORT_SCHEMA, main, run
from hvlasov.cli.config import ConfigError, ExperimentConfig, load_config, validate
from hvlasov.phasefield import save_snapshot


def write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


MF = """
[experiment]
kind = mf-convergence
seed = 5
[grid]
n = 32
[manybody]
n_list = 4, 8
samples = 24
z1_grid = 16
"""


def test_load_config_reads_every_section(tmp_path):
    cfg = load_config(write(tmp_path, """
[experiment]
kind = beta-derivative
seed = 9
[potential]
kind = gaussian
amplitude = 0.5
width = 0.7
[grid]
n = 16
[solver]
t_final = 0.4
dt = 0.002
picard_window = none
[manybody]
lambda = 0.25
times = 0.1 0.2
[audit]
trials = 3
"""))
    assert cfg.kind == "beta-derivative" and cfg.seed == 9
    assert cfg.spec().width == 0.7 and cfg.times == (0.1, 0.2) and cfg.lam == 0.25
    assert cfg.picard_window is None and cfg.trials == 3


@pytest.mark.parametrize("text, path", [
    ("[experiment]\nkind = nonsense\n", "experiment.kind"),
    ("[experiment]\nkind = mf-convergence\n[grid]\nn = 48\n", "grid.n"),
    ("[experiment]\nkind = mf-convergence\n[grid]\nsize = 32\n", "grid.size"),
    ("[experiment]\nkind = mf-convergence\n[manybody]\nlambda = 2\n", "manybody.lambda"),
    ("[experiment]\nkind = mf-convergence\n[solver]\ndt = abc\n", "solver.dt"),
    ("[experiment]\nkind = mf-convergence\n[manybody]\nn_list = 1 4\n", "manybody.n_list"),
    ("[experiment]\nkind = beta-derivative\n[manybody]\ntimes = 0.001\n", "manybody.times"),
    ("[grid]\nn = 32\n", "experiment.kind"),
])
def test_config_errors_name_the_field(tmp_path, text, path):
    with pytest.raises(ConfigError, match=path.replace(".", r"\.")):
        load_config(write(tmp_path, text))


def test_overrides_are_validated():
    cfg = ExperimentConfig(kind="identity-suite")
    assert cfg.with_overrides(seed=4, threads=None).seed == 4
    with pytest.raises(ConfigError):
        cfg.with_overrides(seed=-1)
    with pytest.raises(ConfigError):
        validate(ExperimentConfig(kind="identity-suite", D=5, N=6))


def test_check_subcommand(tmp_path, capsys):
    assert main(["check", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 9
    report = json.loads((tmp_path / "identity-suite.json").read_text())
    assert report["schema"] == REPORT_SCHEMA and report["passed"]
    assert all(a["passed"] for a in report["assertions"])
    rows = (tmp_path / "identity-suite.csv").read_text().splitlines()
    assert rows[0] == "check,max_residual,limit" and len(rows) == 10
    assert max(float(r.split(",")[1]) for r in rows[1:-1]) <= 1e-10


def test_mf_convergence_is_deterministic(tmp_path, capsys):
    cfg_path = write(tmp_path, MF)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg_path), "--out", str(a)]) in (0, 1)
    assert main(["--out", str(b), "run", "--config", str(cfg_path)]) in (0, 1)
    csv_a = (a / "mf-convergence.csv").read_bytes()
    assert csv_a == (b / "mf-convergence.csv").read_bytes()
    lines = csv_a.decode().splitlines()
    assert lines[0].split(",")[:5] == ["N", "t", "lambda", "estimate", "stderr"]
    assert len(lines) == 3


def test_seed_flag_changes_samples(tmp_path, capsys):
    cfg = load_config(write(tmp_path, MF)).with_overrides(N_list=(4,))
    r1 = run(cfg, tmp_path / "s1")
    r2 = run(cfg.with_overrides(seed=6), tmp_path / "s2")
    e1 = (tmp_path / "s1" / "mf-convergence.csv").read_text()
    e2 = (tmp_path / "s2" / "mf-convergence.csv").read_text()
    assert r1["config"]["seed"] == 5 and r2["config"]["seed"] == 6
    assert e1 != e2


def test_info_subcommand(tmp_path, capsys):
    path = tmp_path / "f.hvlf"
    save_snapshot(path, random_state(0, PhaseGrid.square(16)))
    assert main(["info", str(path)]) == 0
    hdr = json.loads(capsys.readouterr().out)
    assert hdr["magic"] == "HVLF" and hdr["counts"] == [16, 16]


def test_bad_inputs_exit_with_status_two(tmp_path, capsys):
    assert main(["run"]) == 2
    assert main(["run", str(write(tmp_path, "[experiment]\nkind = x\n"))]) == 2
    assert main(["info", str(tmp_path / "missing")]) == 2
    err = capsys.readouterr().err
    assert "experiment.kind" in err


def test_failed_assertion_exits_with_status_one(tmp_path, capsys):
    # a tolerance below rounding makes the identity checks fail
    path = write(tmp_path, "[experiment]\nkind = identity-suite\n[audit]\nseeds = 2\n"
                           "tolerance = 1e-30\n")
    assert main(["run", str(path), "--out", str(tmp_path)]) == 1
    assert "[FAIL]" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hvlasov", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0
    for sub in ("run", "check", "info"):
        assert sub in proc.stdout
