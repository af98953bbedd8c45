"""Monte Carlo estimate of ``<q_1>`` for N-particle transport solutions.

For product initial data the N-body Liouville solution is known pointwise
through the backward flow, and ``|alpha_N(t)|^2`` is the push-forward of
``prod |a0|^2`` under the forward flow.  With ``g(tail) = int conj(a(t, z1))
alpha_N(t, z1, tail) dz1`` and the tail marginal ``h(tail) = int |alpha_N(t,
z1, tail)|^2 dz1`` one has

    ||p_1 alpha_N(t)||^2 = int |g|^2 = E_tail[ |g|^2 / h ],

where tails are distributed like ``h``, i.e. like the last ``N - 1``
particles of a configuration drawn from ``|alpha_N(t)|^2``.
"""

from dataclasses import dataclass
import math
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..characteristics import NBodyState, flow_nbody
from ..errors import InvalidArgument, OutOfRange
from ..manybody import ProductInitialData, evaluate_liouville
from ..phasefield import CoordinateKind, PhaseGrid, TrigInterpolant, inverse_velocity_fourier


@dataclass(frozen=True)
class MonteCarloParams:
    samples: int = 200
    seed: int = 0
    # quadrature grid for the z1 integrals
    z1_grid: PhaseGrid = None
    dt: float = 5e-3
    chunk: int = 16
    # worker processes; samples carry their own seeds so results do not depend on it
    workers: int = 1


def sample_product(data: ProductInitialData, seed: int):
    """One configuration of ``N`` particles drawn from ``prod |a0|^2`` by rejection.

    Proposals are uniform on the grid box; the acceptance bound is the
    squared sum of the absolute Fourier coefficients, which dominates
    ``|a0|^2`` everywhere.
    """
    rng = np.random.default_rng(seed)
    grid = data.factor.grid
    L, Lv = grid.halfwidths
    bound = float(np.sum(np.abs(data.interp.full))) ** 2
    out = np.empty((0, 2))
    batch = max(64, 16 * data.N)
    while out.shape[0] < data.N:
        z = np.column_stack([rng.uniform(-L, L, batch), rng.uniform(-Lv, Lv, batch)])
        dens = np.abs(data.one_particle(z)) ** 2
        keep = rng.uniform(0.0, bound, batch) < dens
        out = np.vstack([out, z[keep]])
    return out[: data.N]


def _chunk_ratios(job, idx):
    """``|g|^2 / h`` for the samples in ``idx`` (NaN for rejected samples)."""
    data, spec, t, mc, nodes, a_nodes, w, h_floor = job
    N = data.N
    tails = []
    for i in idx:
        z0 = sample_product(data, mc.seed + i)
        st = NBodyState(z0[:, 0], z0[:, 1], 0.0, spec.box_halfwidth)
        st = flow_nbody(spec, st, t, mc.dt) if t > 0 else st
        tails.append(np.column_stack([st.positions[1:, 0], st.velocities[1:, 0]]))
    tails = np.array(tails)  # (B, N-1, 2)
    pts = np.empty((tails.shape[0], nodes.shape[0], N, 2))
    pts[:, :, 0, :] = nodes[None]
    pts[:, :, 1:, :] = tails[:, None]
    vals = evaluate_liouville(data, spec, t, pts, mc.dt)  # (B, n_nodes)
    g = (vals @ np.conj(a_nodes)) * w
    h = np.sum(np.abs(vals) ** 2, axis=1) * w
    out = np.abs(g) ** 2 / np.where(h < h_floor, 1.0, h)
    out[h < h_floor] = np.nan
    return out


def _mean_field_at(alpha_traj, t):
    try:
        field = alpha_traj.at(t)
    except KeyError:
        raise OutOfRange(f"trajectory has no snapshot at t={t}") from None
    if field.kind is CoordinateKind.POSITION_XI:
        field = inverse_velocity_fourier(field)
    return field


def estimate_q1(alpha_traj, data: ProductInitialData, spec, t: float, mc: MonteCarloParams = None):
    """Monte Carlo estimate of ``<alpha_N(t), q_1 alpha_N(t)>`` with ``q_1`` built on ``alpha(t)``.

    ``alpha_traj`` is a mean-field trajectory holding a snapshot at ``t``.
    Sample ``i`` uses the seed ``mc.seed + i``.  Samples whose tail marginal
    falls below ``1e-12 rho^(N-1)`` are rejected and counted, where
    ``rho = int |a0|^4`` is the mean one-particle density; the marginal is a
    product of ``N - 1`` densities, so an absolute threshold would reject
    every sample once ``N`` is moderately large.  Returns a dict with
    ``estimate``, ``stderr``, ``samples`` (accepted), ``rejected``.
    """
    mc = mc or MonteCarloParams()
    if mc.samples < 2:
        raise InvalidArgument("need at least two samples")
    if t < 0:
        raise InvalidArgument("t must be nonnegative")
    alpha_t = _mean_field_at(alpha_traj, t)
    qgrid = mc.z1_grid or data.factor.grid
    if qgrid.d != 1:
        raise InvalidArgument("quadrature grid must be d = 1")
    X, V = qgrid.mesh()
    nodes = np.column_stack([X.ravel(), V.ravel()])
    w = qgrid.cell_volume
    a_nodes = TrigInterpolant(alpha_t)(nodes)
    a_nodes = a_nodes / math.sqrt(float(np.sum(np.abs(a_nodes) ** 2)) * w)
    N = data.N
    f0 = data.factor
    rho = float(np.sum(np.abs(f0.values) ** 4)) * f0.grid.cell_volume
    h_floor = 1e-12 * rho ** (N - 1)

    job = (data, spec, t, mc, nodes, a_nodes, w, h_floor)
    chunks = [range(s, min(s + mc.chunk, mc.samples)) for s in range(0, mc.samples, mc.chunk)]
    if mc.workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=mc.workers) as pool:
            parts = list(pool.map(_chunk_ratios, [job] * len(chunks), chunks))
    else:
        parts = [_chunk_ratios(job, idx) for idx in chunks]
    ratios = np.concatenate(parts)
    valid = np.isfinite(ratios)
    rejected = int(np.sum(~valid))
    if rejected > 0.01 * mc.samples:
        warnings.warn(f"{rejected} of {mc.samples} samples rejected "
                      "(tail marginal below threshold)", stacklevel=2)
    r = ratios[valid]
    if r.size < 2:
        raise InvalidArgument("fewer than two usable samples")
    est = 1.0 - float(np.mean(r))
    stderr = float(np.std(r, ddof=1) / math.sqrt(r.size))
    return {"estimate": est, "stderr": stderr, "samples": int(r.size), "rejected": rejected,
            "N": N, "t": t}
