"""Fixed-point (Picard) solver for the Hamiltonian Vlasov equation

    d/dt a = [v^2/2 + Gamma * |a|^2, a] - (Gamma * [conj(a), a]) a.

Starting from ``a_0(t) = a0`` for all ``t``, iterate ``n`` supplies the fields

    rho_n = int |a_n|^2 dv,   F_n = -Gamma' * rho_n,   K_n = Gamma' * int conj(a_n) d_v a_n dv,

and the next iterate is given pointwise by the transport formula

    a_{n+1}(t, z) = a0(Z_n(0, t, z)) exp(-int_0^t K_n(s, X_n(s, t, z)) ds),

where ``Z_n = (X_n, V_n)`` is the flow of ``dX/dt = V, dV/dt = F_n(t, X)``.
``K_n`` is purely imaginary, so the exponential is a phase.  All fields are
stored on uniform time slices of length ``dt``; the backward characteristics
use Verlet steps that land on those slices, and the ``K`` integral uses the
trapezoid rule on the same slices.
"""

import math
import time as _time

import numpy as np

from ..characteristics import FieldHistory, _real_series, _truncate, backward_transport
from ..errors import IterationFailure
from ..phasefield import ComplexField, CoordinateKind, TrigInterpolant
from .common import (KernelConvolver, SolverParams, Trajectory, check_potential_box,
                     normalized_or_rescaled, require_1d, snapshot_indices, time_slices,
                     velocity_moments)


def _slice_fields(values, grid, conv):
    rho, w_im = velocity_moments(values, grid)
    force = -conv(rho)
    k = conv(w_im)
    return rho, force, k


def _transport(interp, x, v, fcoef, kcoef, dt, kx, out_shape):
    foot_x, foot_v, acc = backward_transport(x, v, fcoef, kcoef, dt, kx)
    vals = interp(np.stack([foot_x, foot_v], axis=-1))
    return (vals * np.exp(-1j * acc)).reshape(out_shape)


def _picard_window(a0: ComplexField, spec, n, dt, params, conv, log):
    grid = a0.grid
    L = grid.x_halfwidth
    kx = math.pi / L
    X, V = grid.mesh()
    x, v = X.ravel(), V.ravel()
    interp = TrigInterpolant(a0)
    shape = (n + 1,) + grid.shape
    # iterate 0 is constant in time
    current = np.broadcast_to(a0.values, shape)
    residuals = []
    for it in range(1, params.picard_max_iter + 1):
        t_start = _time.perf_counter()
        rho, force, k = _slice_fields(current, grid, conv)
        fcoef = _truncate(_real_series(force, L))
        if spec.is_zero:
            kcoef = np.zeros((n + 1, 1), dtype=complex)
        else:
            kcoef = _truncate(_real_series(k, L))
        nxt = _transport(interp, x, v, fcoef, kcoef, dt, kx, shape)
        nxt[0] = a0.values
        diff = np.sqrt(np.sum(np.abs(nxt - current) ** 2, axis=(1, 2)) * grid.cell_volume)
        res = float(diff.max())
        residuals.append(res)
        log.append({"iteration": len(log) + 1, "residual": res,
                    "seconds": _time.perf_counter() - t_start})
        current = nxt
        if res <= params.picard_tol:
            return current, (rho, force, k), residuals
        if not np.isfinite(res):
            break
    raise IterationFailure(
        f"fixed-point iteration did not reach {params.picard_tol:g} within "
        f"{params.picard_max_iter} iterations (last residual {residuals[-1]:.3g})",
        residuals,
    )


def solve_hamilton_vlasov(alpha0: ComplexField, spec, T: float, params: SolverParams) -> Trajectory:
    """Run the fixed-point construction on ``[0, T]`` and return its limit.

    The iteration stops once successive iterates differ by at most
    ``params.picard_tol`` in the sup-over-slices L2 norm; otherwise an
    :class:`IterationFailure` carrying the residual sequence is raised.  With
    ``params.picard_window`` set, ``[0, T]`` is cut into windows of that length
    and the iteration is run on each window in turn, starting from the final
    state of the previous one.
    """
    require_1d(alpha0, CoordinateKind.POSITION_VELOCITY)
    check_potential_box(spec, alpha0)
    a0 = normalized_or_rescaled(alpha0)
    grid = a0.grid
    n_total, dt = time_slices(T, params.dt)
    conv = KernelConvolver(spec, grid.counts[0], 1)

    if params.picard_window is None or params.picard_window >= T:
        windows = [n_total]
    else:
        per = max(1, int(round(params.picard_window / dt)))
        windows = [per] * (n_total // per)
        if n_total % per:
            windows.append(n_total % per)

    keep = set(snapshot_indices(n_total, params.snapshot_stride))
    times, fields = [0.0], [a0]
    h_t, h_f, h_k, h_rho = [], [], [], []
    log, window_residuals = [], []
    start_field = a0
    offset = 0
    for n in windows:
        if n == 0:
            continue
        sol, (rho, force, k), residuals = _picard_window(start_field, spec, n, dt, params, conv, log)
        window_residuals.append(residuals)
        first = 0 if offset == 0 else 1
        for i in range(first, n + 1):
            h_t.append((offset + i) * dt)
            h_f.append(force[i])
            h_k.append(k[i])
            h_rho.append(rho[i])
        for i in range(1, n + 1):
            if offset + i in keep:
                times.append((offset + i) * dt)
                fields.append(ComplexField(grid, sol[i]))
        start_field = ComplexField(grid, sol[n])
        offset += n

    history = None
    if h_t:
        history = FieldHistory(np.array(h_t), np.array(h_f), grid.x_halfwidth,
                               k_fields=np.array(h_k), densities=np.array(h_rho))
    info = {
        "dt": dt,
        "steps": n_total,
        "solver": "hamilton-vlasov",
        "residuals": window_residuals[0] if len(window_residuals) == 1 else window_residuals,
        "iterations": log,
    }
    return Trajectory(times, fields, history, info)
