"""Semi-Lagrangian solver for the classical Vlasov equation.

Each step is the splitting drift(dt/2) / kick(dt) / drift(dt/2).  Drifts
shift ``f`` along ``x`` by ``v dt / 2`` and kicks shift it along ``v`` by
``F(x) dt``; both shifts are evaluated exactly for band-limited data by
multiplying with phase factors in Fourier space.  The force is computed from
the density after the first drift, which is the density at the half step
because the kick does not change it.
"""

import numpy as np
import scipy.fft as sfft

from ..characteristics import FieldHistory
from ..errors import InvalidArgument, IterationFailure
from ..phasefield import ComplexField, CoordinateKind
from .common import (KernelConvolver, SolverParams, Trajectory, check_potential_box,
                     require_1d, snapshot_indices, time_slices)


def solve_vlasov(f0: ComplexField, spec, T: float, params: SolverParams) -> Trajectory:
    """Evolve a phase-space density with ``df/dt = -v f_x - F(x) f_v``, ``F = -Gamma' * rho``."""
    require_1d(f0, CoordinateKind.POSITION_VELOCITY)
    check_potential_box(spec, f0)
    grid = f0.grid
    vals = f0.values
    if np.max(np.abs(vals.imag)) > 1e-12 * max(1.0, np.max(np.abs(vals.real))):
        raise InvalidArgument("Vlasov density must be real")
    f = vals.real.copy()
    fmax = float(np.max(np.abs(f)))
    if f.min() < -1e-10 * fmax:
        raise InvalidArgument(f"density has negative mass {f.min():.3g}")
    mass = float(np.sum(f)) * grid.cell_volume
    if abs(mass - 1.0) > 1e-8:
        raise InvalidArgument(f"density must have unit mass, got {mass:.12g}")

    n, dt = time_slices(T, params.dt)
    x = grid.axis(0)
    v = grid.axis(1)
    kx = grid.frequencies(0)
    kv = grid.frequencies(1)
    drift = np.exp(-1j * np.outer(kx, v) * (dt / 2))  # (kx, v)
    conv = KernelConvolver(spec, grid.counts[0], 1)
    dv = grid.spacings[1]

    keep = set(snapshot_indices(n, params.snapshot_stride))
    times, fields = [0.0], [f0]
    hist_t, hist_f, hist_rho = [], [], []

    def half_drift(g):
        return sfft.ifft(drift * sfft.fft(g, axis=0), axis=0).real

    for step in range(1, n + 1):
        f = half_drift(f)
        rho = np.sum(f, axis=1) * dv
        force = -conv(rho)
        hist_t.append((step - 0.5) * dt)
        hist_f.append(force)
        hist_rho.append(rho)
        kick = np.exp(-1j * np.outer(force, kv) * dt)  # (x, kv)
        f = sfft.ifft(kick * sfft.fft(f, axis=1), axis=1).real
        f = half_drift(f)
        if not np.all(np.isfinite(f)):
            raise IterationFailure(f"non-finite density at step {step}")
        if step in keep:
            times.append(step * dt)
            fields.append(ComplexField(grid, f))

    history = None
    if hist_t:
        history = FieldHistory(np.array(hist_t), np.array(hist_f), grid.x_halfwidth,
                               densities=np.array(hist_rho))
    return Trajectory(times, fields, history, {"dt": dt, "steps": n, "solver": "vlasov"})
