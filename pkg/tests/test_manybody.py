import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hvlasov import (ComplexField, InvalidArgument, PhaseGrid, PotentialSpec, random_state,
                     velocity_fourier)
from hvlasov.cli.experiments import smooth_datum
from hvlasov.manybody import (PairState, ProductInitialData, evaluate_liouville, mfc_residuals,
                              pair_derivative_norms, pair_memory_estimate, random_pair_state,
                              solve_pseudo_schrodinger_pair)
from hvlasov.meanfield import BoundParams, SolverParams, b1_nbody
from hvlasov.phasefield import read_snapshot_header

ZERO = PotentialSpec.zero()
COS = PotentialSpec.cosine(1, 1)
GRID = PhaseGrid.square(32)


def datum(x, v):
    return (1 + 0.5 * np.cos(x) + 0.2j * np.sin(2 * x)) * np.exp(-v**2 / 2)


@pytest.fixture(scope="module")
def pair_run():
    a = smooth_datum(GRID)
    p0 = PairState.product(velocity_fourier(a))
    tr = solve_pseudo_schrodinger_pair(p0, COS, 0.5, SolverParams(dt=5e-3, snapshot_stride=25))
    return a, p0, tr


def test_product_data_checks():
    a = smooth_datum(GRID)
    with pytest.raises(InvalidArgument):
        ProductInitialData(a, 1)
    with pytest.raises(InvalidArgument):
        ProductInitialData(velocity_fourier(a), 3)
    with pytest.warns(UserWarning):
        ProductInitialData(a.with_values(2 * a.values), 2)


def test_liouville_free_transport():
    X, V = GRID.mesh()
    raw = ComplexField(GRID, datum(X, V))
    data = ProductInitialData(raw.normalized(), 3)
    rng = np.random.default_rng(1)
    pts = np.stack([rng.uniform(-3, 3, (20, 3)), rng.normal(size=(20, 3))], axis=-1)
    t = 0.9
    got = evaluate_liouville(data, ZERO, t, pts, 1e-2)
    one = datum(pts[..., 0] - pts[..., 1] * t, pts[..., 1]) / raw.norm()
    assert np.max(np.abs(got - np.prod(one, axis=-1))) < 1e-8


@given(st.integers(0, 10**6), st.permutations(range(4)))
def test_liouville_symmetric_in_particles(seed, perm):
    data = ProductInitialData(smooth_datum(GRID), 4)
    rng = np.random.default_rng(seed)
    pts = np.stack([rng.uniform(-3, 3, 4), rng.normal(size=4)], axis=-1)
    a = evaluate_liouville(data, COS, 0.4, pts, 1e-2)
    b = evaluate_liouville(data, COS, 0.4, pts[list(perm)], 1e-2)
    assert abs(a - b) < 1e-10


def test_liouville_agrees_with_pair_solver(pair_run):
    a, _, tr = pair_run
    fin = tr.final.to_velocity().values
    idx = np.random.default_rng(0).integers(0, 32, (200, 4))
    x, v = GRID.axis(0), GRID.axis(1)
    pts = np.stack([np.stack([x[idx[:, 0]], v[idx[:, 1]]], -1),
                    np.stack([x[idx[:, 2]], v[idx[:, 3]]], -1)], axis=1)
    got = evaluate_liouville(ProductInitialData(a, 2), COS, 0.5, pts, 1e-3)
    ref = fin[idx[:, 0], idx[:, 1], idx[:, 2], idx[:, 3]]
    assert np.max(np.abs(got - ref)) <= 1e-4


def test_pair_run_conserves_norm_and_symmetry(pair_run):
    _, _, tr = pair_run
    assert tr.times == pytest.approx([0.0, 0.125, 0.25, 0.375, 0.5])
    for s in tr.states:
        assert abs(s.norm() - 1) < 1e-10
        assert s.swap_residual() < 1e-10


def test_nbody_derivative_growth_within_envelope(pair_run):
    from hvlasov.counting import product_datum_constant
    a, _, tr = pair_run
    M = product_datum_constant(a)
    bp = BoundParams.for_potential(M, 1.0)
    for t, s in zip(tr.times, tr.states):
        g1, _ = pair_derivative_norms(s)
        assert g1 <= 1.05 * b1_nbody(bp.M, bp.C1, t)


def test_pair_free_round_trip():
    grid = PhaseGrid.square(16).dual()
    p0 = random_pair_state(4, grid)
    fwd = solve_pseudo_schrodinger_pair(p0, ZERO, 0.6, SolverParams(dt=0.05), keep=False)
    back = solve_pseudo_schrodinger_pair(fwd.final, ZERO, 0.6, SolverParams(dt=0.05),
                                         direction=-1, keep=False)
    assert np.max(np.abs(back.final.values - p0.values)) < 1e-12
    assert fwd.final.distance(p0) > 1e-3


def test_free_product_stays_product():
    grid = PhaseGrid.square(16)
    a = velocity_fourier(smooth_datum(grid))
    tr = solve_pseudo_schrodinger_pair(PairState.product(a), ZERO, 0.5, SolverParams(dt=0.05),
                                       keep=False)
    from hvlasov.meanfield import solve_hamilton_hartree
    one = solve_hamilton_hartree(a, ZERO, 0.5, SolverParams(dt=0.05)).final
    expected = np.multiply.outer(one.values, one.values)
    assert np.max(np.abs(tr.final.values - expected)) < 1e-12


def test_pair_solver_guards():
    grid = PhaseGrid.square(16)
    p = random_pair_state(0, grid)
    with pytest.raises(InvalidArgument):
        solve_pseudo_schrodinger_pair(p, COS, 0.1, SolverParams(dt=0.05))
    with pytest.raises(InvalidArgument):
        solve_pseudo_schrodinger_pair(p.to_xi(), COS, 0.1, SolverParams(dt=0.05),
                                      memory_budget=1024)
    assert pair_memory_estimate(PhaseGrid.square(64)) >= 64**4 * 16


def test_pair_state_validation_and_snapshot(tmp_path):
    grid = PhaseGrid.square(8)
    vals = np.random.default_rng(0).normal(size=grid.shape * 2)
    with pytest.raises(InvalidArgument):
        PairState(grid, vals / np.linalg.norm(vals) / grid.cell_volume)
    p = random_pair_state(2, grid)
    path = tmp_path / "pair.hvlf"
    p.save(path)
    hdr = read_snapshot_header(path)
    assert hdr["n_particles"] == 2 and hdr["counts"] == [8, 8, 8, 8]
    assert np.array_equal(PairState.load(path).values, p.values)
    back = p.to_xi().to_velocity()
    assert np.max(np.abs(back.values - p.values)) < 1e-12


def test_mfc_with_zero_potential():
    grid = PhaseGrid.square(16)
    for seed in range(5):
        r = mfc_residuals(ZERO, random_pair_state(seed, grid))
        assert r["constants"]["C1"] == 1.0
        assert r["residuals"][0] >= -1e-10
        assert r["lhs"][1] == 0.0
        assert r["residuals"][2] >= -1e-10


def test_mfc_with_cosine_on_fifty_states():
    grid = PhaseGrid.square(16)
    worst = min(min(mfc_residuals(COS, random_pair_state(s, grid))["residuals"])
                for s in range(50))
    assert worst >= -1e-8


@given(st.integers(2, 64), st.integers(0, 10**6))
def test_mfc_holds_for_any_particle_count(N, seed):
    r = mfc_residuals(PotentialSpec.gaussian(1.0, 0.8), random_pair_state(seed, PhaseGrid.square(8)),
                      N_formal=N)
    assert min(r["residuals"]) >= -1e-8


def test_product_pair_state_symmetrises():
    grid = PhaseGrid.square(8)
    a, b = random_state(0, grid), random_state(1, grid)
    p = PairState.product(a, b)
    assert abs(p.norm() - 1) < 1e-12 and p.swap_residual() < 1e-14
