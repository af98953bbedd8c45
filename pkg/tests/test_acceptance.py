"""Acceptance suite: one test per criterion, each printing a single pass/fail line.

Runtimes at desk scale (one core): criterion 2/4/5 share a 128^2 run of about
two minutes, criterion 6 takes about eight minutes, criterion 7 about one.
"""

import math
import time

import numpy as np
import pytest

from hvlasov import (ComplexField, PhaseGrid, PotentialSpec, potential_constant, random_state,
                     sobolev_norm, velocity_fourier)
from hvlasov.characteristics import flow_jacobian_fd, jacobian_max_norm, meanfield_flow_map
from hvlasov.cli.config import ExperimentConfig
from hvlasov.cli.experiments import run_beta_derivative, run_mf_convergence, smooth_datum
from hvlasov.counting import CHECKS, CutoffSpec, cutoff_residual, opnorm_residuals
from hvlasov.counting.algebra import DiscreteState, random_unit_vector
from hvlasov.counting.identities import identity_residuals, m_decomposition_residual
from hvlasov.manybody import PairState, random_pair_state, solve_pseudo_schrodinger_pair
from hvlasov.meanfield import (SolverParams, energy_hartree, flow_derivative_bound,
                               lipschitz_factor, q_m, solve_hamilton_hartree,
                               solve_hamilton_vlasov, solve_vlasov)

from conftest import report_criterion

COS = PotentialSpec.cosine(1, 1)
ZERO = PotentialSpec.zero()


@pytest.fixture(scope="module")
def reference_runs():
    """The 128^2 configuration: HVl, HHt and Vlasov to T = 1 with dt = 5e-3."""
    grid = PhaseGrid.square(128)
    a0 = smooth_datum(grid)
    params = SolverParams(dt=5e-3, snapshot_stride=20)
    t0 = time.perf_counter()
    hv = solve_hamilton_vlasov(a0, COS, 1.0, params)
    hh = solve_hamilton_hartree(velocity_fourier(a0), COS, 1.0, params)
    vl = solve_vlasov(a0.density(), COS, 1.0, params)
    elapsed = time.perf_counter() - t0
    return {"grid": grid, "a0": a0, "hv": hv, "hh": hh, "vl": vl, "seconds": elapsed}


def test_criterion_1_counting_identities():
    t0 = time.perf_counter()
    worst = {name: 0.0 for name in CHECKS}
    for seed in range(100):
        for name, val in identity_residuals(seed, D=3, N=4).items():
            worst[name] = max(worst[name], val)
    for N in (3, 4, 5):
        for lam in (0.0, 0.5, 1.0):
            for seed in range(10):
                psi = DiscreteState.random(seed + 1, 3, N).vector
                r = m_decomposition_residual(random_unit_vector(seed, 3), N, lam, psi)
                worst["m_three_term_decomposition"] = max(worst["m_three_term_decomposition"], r)
    elapsed = time.perf_counter() - t0
    top = max(worst.values())
    ok = top <= 1e-10 and elapsed < 60
    report_criterion(1, "counting identities", ok,
                     f"max residual {top:.2e} (limit 1e-10), {elapsed:.1f} s (limit 60 s)")
    assert ok, worst


def test_criterion_2_diagram_closure(reference_runs):
    r = reference_runs
    f_T = r["vl"].final.values.real
    l1 = float(np.sum(np.abs(np.abs(r["hv"].final.values) ** 2 - f_T))) * r["grid"].cell_volume
    l2 = velocity_fourier(r["hv"].final).distance(r["hh"].final)
    ok = l1 <= 5e-3 and l2 <= 5e-3 and r["seconds"] < 300
    report_criterion(2, "diagram closure", ok,
                     f"L1 {l1:.2e}, L2 {l2:.2e} (limit 5e-3), {r['seconds']:.0f} s (limit 300 s)")
    assert ok


def test_criterion_3_exact_free_transport():
    grid = PhaseGrid.square(64)
    X, V = grid.mesh()
    t = 0.75

    def datum(x, v):
        return (1 + 0.5 * np.cos(x) + 0.2j * np.sin(2 * x)) * np.exp(-v**2 / 2)

    raw = ComplexField(grid, datum(X, V))
    a0 = raw.normalized()
    exact = ComplexField(grid, datum(X - V * t, V) / raw.norm())
    p = SolverParams(dt=0.05)
    err_hv = np.max(np.abs(solve_hamilton_vlasov(a0, ZERO, t, p).final.values - exact.values))
    err_hh = np.max(np.abs(solve_hamilton_hartree(velocity_fourier(a0), ZERO, t, p).final.values
                           - velocity_fourier(exact).values))
    dens = a0.density()
    err_vl = np.max(np.abs(solve_vlasov(dens, ZERO, t, p).final.values - exact.density().values))

    pgrid = PhaseGrid.square(32).dual()
    p0 = random_pair_state(0, pgrid)
    fwd = solve_pseudo_schrodinger_pair(p0, ZERO, t, p, keep=False)
    back = solve_pseudo_schrodinger_pair(fwd.final, ZERO, t, p, direction=-1, keep=False)
    err_pair = float(np.max(np.abs(back.final.values - p0.values)))
    worst = max(err_hv, err_hh, err_vl)
    ok = worst <= 1e-8 and err_pair <= 1e-12
    report_criterion(3, "exact free transport", ok,
                     f"HVl {err_hv:.1e}, HHt {err_hh:.1e}, Vl {err_vl:.1e} (limit 1e-8); "
                     f"pair round trip {err_pair:.1e} (limit 1e-12)")
    assert ok


def test_criterion_4_conservation(reference_runs):
    r = reference_runs
    e0 = energy_hartree(velocity_fourier(r["a0"]), COS)
    norm_drift = max(abs(f.norm() - 1) for f in r["hv"].fields + r["hh"].fields)
    e_hv = max(abs(energy_hartree(velocity_fourier(f), COS) - e0) for f in r["hv"].fields)
    e_hh = max(abs(energy_hartree(f, COS) - e0) for f in r["hh"].fields)
    rel = max(e_hv, e_hh) / abs(e0)
    ok = norm_drift <= 1e-8 and rel <= 1e-6
    report_criterion(4, "conservation", ok,
                     f"norm drift {norm_drift:.1e} (limit 1e-8), relative energy drift "
                     f"HVl {e_hv / abs(e0):.2e}, HHt {e_hh / abs(e0):.2e} (limit 1e-6)")
    assert ok


def test_criterion_5_gronwall_envelopes(reference_runs):
    r = reference_runs
    a0, hv = r["a0"], r["hv"]
    C = potential_constant(COS)
    M1 = sobolev_norm(a0, 1)
    w12 = min(1.05 * q_m(M1, C, t) - sobolev_norm(f, 1) for t, f in zip(hv.times, hv.fields))

    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-math.pi, math.pi, 16), rng.uniform(-3, 3, 16)])
    jac = math.inf
    for t in hv.times[1:]:
        norm = jacobian_max_norm(flow_jacobian_fd(meanfield_flow_map(hv.history, 0.0, t, 5e-3),
                                                  pts))
        jac = min(jac, 1.01 * flow_derivative_bound(C, a0.norm(), t) - norm)

    b0 = ComplexField(r["grid"], a0.values + 0.05 * random_state(0, r["grid"]).values).normalized()
    params = SolverParams(dt=5e-3, snapshot_stride=20)
    hb = solve_hamilton_hartree(velocity_fourier(b0), COS, 1.0, params)
    M = max(M1, sobolev_norm(b0, 1))
    d0 = a0.distance(b0)
    lip = min(1.05 * lipschitz_factor(M, C, t) * d0 - fa.distance(fb)
              for t, fa, fb in zip(r["hh"].times, r["hh"].fields, hb.fields))
    ok = w12 >= 0 and jac >= 0 and lip >= 0
    report_criterion(5, "Gronwall envelopes", ok,
                     f"margins: W12 {w12:.3g}, flow Jacobian {jac:.3g}, Lipschitz {lip:.3g} "
                     "(all must be >= 0)")
    assert ok


def test_criterion_6_beta_derivative_identity():
    cfg = ExperimentConfig(kind="beta-derivative", n=64, dt=1e-3, lam=0.5, T=0.5,
                           times=(0.1, 0.2, 0.3, 0.4, 0.5))
    t0 = time.perf_counter()
    res = run_beta_derivative(cfg)
    elapsed = time.perf_counter() - t0
    worst = max(row["abs_difference"] for row in res.rows)
    ok = len(res.rows) == 5 and worst <= 1e-4 and elapsed < 600
    report_criterion(6, "beta derivative identity", ok,
                     f"max |FD - rhs| {worst:.2e} over {len(res.rows)} times (limit 1e-4), "
                     f"{elapsed:.0f} s (limit 600 s)")
    assert ok


def test_criterion_7_mean_field_trend():
    cfg = ExperimentConfig(kind="mf-convergence", n=64, dt=5e-3, t=0.5, lam=0.5, samples=200,
                           z1_grid=32, N_list=(4, 8, 16, 32))
    t0 = time.perf_counter()
    res = run_mf_convergence(cfg)
    elapsed = time.perf_counter() - t0
    rows = res.rows
    trend = all(lo["estimate"] + 2 * lo["stderr"] >= hi["estimate"] - 2 * hi["stderr"]
                for lo, hi in zip(rows, rows[1:]))
    below = all(r["estimate"] <= 0 or math.log(r["estimate"]) <= r["log_envelope"] for r in rows)
    ok = trend and below and elapsed <= 900
    est = ", ".join(f"N={r['N']}: {r['estimate']:.4f}+-{r['stderr']:.4f}" for r in rows)
    report_criterion(7, "mean-field trend", ok,
                     f"{est}; ln envelope {min(r['log_envelope'] for r in rows):.0f} and up; "
                     f"{elapsed:.0f} s (limit 900 s)")
    assert ok


def test_criterion_8_cutoff_and_operator_norm_audits():
    grid = PhaseGrid.square(32)
    rng = np.random.default_rng(0)
    cut = math.inf
    for i in range(50):
        R = float(rng.choice([0.5, 1.0, 2.0, 4.0]))
        for state in (velocity_fourier(random_state(i, grid)), random_pair_state(i, grid)):
            r = cutoff_residual(state, CutoffSpec(R))
            cut = min(cut, r["rhs"] - r["lhs"])
    ahat = velocity_fourier(smooth_datum(grid))
    op = opnorm_residuals(ahat, COS, trials=50, seed=0)
    opmin = min(float(v.min()) for v in op.values())
    ok = cut >= -1e-8 and opmin >= -1e-8 and all(v.size == 50 for v in op.values())
    report_criterion(8, "cutoff and operator-norm audits", ok,
                     f"min residual cutoff {cut:.3g}, operator norms {opmin:.3g} (limit -1e-8)")
    assert ok
