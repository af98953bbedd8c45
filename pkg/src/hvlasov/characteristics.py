"""Characteristic flows of the N-body system and of the mean-field system.

Both flows are integrated with velocity Verlet.  Integration towards an
earlier time uses the negated step; the step schedule is always anchored at
the earlier of the two end times, so that a forward run followed by the
matching backward run composes to the identity up to rounding.
"""

from dataclasses import dataclass, field
import math

import numba
import numpy as np

from .errors import InvalidArgument, OutOfRange
from .potential import PotentialKind, PotentialSpec, eval_derivatives, _wrap_count


def wrap(x, L):
    """Map positions into ``[-L, L)``."""
    return (np.asarray(x) + L) % (2 * L) - L


def step_schedule(t0, t1, dt):
    """Signed Verlet steps leading from ``t0`` to ``t1``.

    Full steps of length ``dt`` start at the earlier time; the remainder is
    the last step in forward direction and, correspondingly, the first step
    when integrating backwards.
    """
    if not dt > 0:
        raise InvalidArgument("dt must be positive")
    span = abs(t1 - t0)
    n_full = int(math.floor(span / dt + 1e-9))
    rem = span - n_full * dt
    if rem <= 1e-12 * max(1.0, span):
        rem = 0.0
    steps = [dt] * n_full + ([rem] if rem > 0 else [])
    if t1 < t0:
        steps = [-s for s in reversed(steps)]
    return steps


# ---------------------------------------------------------------------------
# N-body flow


@dataclass
class NBodyState:
    """Positions and velocities of ``N`` particles at one time."""

    positions: np.ndarray
    velocities: np.ndarray
    time: float = 0.0
    box_halfwidth: float = math.pi

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        vel = np.array(self.velocities, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if vel.ndim == 1:
            vel = vel[:, None]
        if pos.shape != vel.shape or pos.shape[0] < 1:
            raise InvalidArgument("positions and velocities must be matching N x d arrays, N >= 1")
        self.positions = wrap(pos, self.box_halfwidth)
        self.velocities = vel

    @property
    def N(self):
        return self.positions.shape[0]

    @property
    def d(self):
        return self.positions.shape[1]


@numba.njit(cache=True)
def _cosine_forces_1d(pos, out, amp, kap, coupling):
    # F_m = coupling * sum_n Gamma'(x_n - x_m) with Gamma' = -A k sin(k y)
    B, N = pos.shape
    for b in range(B):
        sc = 0.0
        ss = 0.0
        for n in range(N):
            sc += math.cos(kap * pos[b, n])
            ss += math.sin(kap * pos[b, n])
        for m in range(N):
            c = math.cos(kap * pos[b, m])
            s = math.sin(kap * pos[b, m])
            # Im(exp(-i k x_m) * S)
            im = c * ss - s * sc
            out[b, m] = -amp * kap * coupling * im


@numba.njit(cache=True)
def _gaussian_forces_1d(pos, out, amp, w, L, n_wrap, coupling):
    B, N = pos.shape
    w2 = w * w
    for b in range(B):
        for m in range(N):
            acc = 0.0
            for n in range(N):
                if n == m:
                    continue
                y = pos[b, n] - pos[b, m]
                for k in range(-n_wrap, n_wrap + 1):
                    s = y + 2.0 * L * k
                    acc += -s / w2 * math.exp(-s * s / (2.0 * w2))
            out[b, m] = amp * coupling * acc


@numba.njit(cache=True)
def _verlet_1d(pos, vel, steps, kind, amp, kap, w, L, n_wrap, coupling):
    B, N = pos.shape
    f = np.zeros((B, N))
    if kind == 1:
        _cosine_forces_1d(pos, f, amp, kap, coupling)
    elif kind == 2:
        _gaussian_forces_1d(pos, f, amp, w, L, n_wrap, coupling)
    for h in steps:
        for b in range(B):
            for m in range(N):
                vel[b, m] += 0.5 * h * f[b, m]
                pos[b, m] += h * vel[b, m]
        if kind == 1:
            _cosine_forces_1d(pos, f, amp, kap, coupling)
        elif kind == 2:
            _gaussian_forces_1d(pos, f, amp, w, L, n_wrap, coupling)
        for b in range(B):
            for m in range(N):
                vel[b, m] += 0.5 * h * f[b, m]


def nbody_forces(spec: PotentialSpec, positions):
    """Mean-field scaled pair forces for a batch of configurations ``(..., N, d)``."""
    pos = np.asarray(positions, dtype=float)
    N = pos.shape[-2]
    if N < 2 or spec.is_zero:
        return np.zeros_like(pos)
    diff = pos[..., None, :, :] - pos[..., :, None, :]  # [m, n] = x_n - x_m
    if spec.d == 1:
        g1 = eval_derivatives(spec, diff[..., 0], 1)[..., None]
    else:
        g1 = eval_derivatives(spec, diff, 1)
    idx = np.arange(N)
    g1[..., idx, idx, :] = 0.0
    return g1.sum(axis=-2) / (N - 1)


def verlet_batch(spec: PotentialSpec, positions, velocities, t0, t1, dt):
    """Integrate batches of N-body configurations of shape ``(..., N, d)``.

    Returns unwrapped positions and velocities at ``t1``.
    """
    pos = np.array(positions, dtype=float)
    vel = np.array(velocities, dtype=float)
    steps = np.asarray(step_schedule(t0, t1, dt), dtype=float)
    N = pos.shape[-2]
    d = pos.shape[-1]
    if len(steps) == 0:
        return pos, vel
    if d == 1:
        shape = pos.shape
        p2 = np.ascontiguousarray(pos.reshape(-1, N))
        v2 = np.ascontiguousarray(vel.reshape(-1, N))
        if spec.is_zero or N < 2:
            kind = 0
        elif spec.kind is PotentialKind.COSINE:
            kind = 1
        else:
            kind = 2
        n_wrap = _wrap_count(spec.width, spec.box_halfwidth) if kind == 2 else 0
        coupling = 1.0 / (N - 1) if N > 1 else 0.0
        if kind == 0:
            span = float(np.sum(steps))
            return pos + span * vel, vel
        _verlet_1d(p2, v2, steps, kind, float(spec.amplitude), float(spec.wavenumber),
                   float(spec.width), float(spec.box_halfwidth), n_wrap, coupling)
        return p2.reshape(shape), v2.reshape(shape)
    f = nbody_forces(spec, pos)
    for h in steps:
        vel += 0.5 * h * f
        pos += h * vel
        f = nbody_forces(spec, pos)
        vel += 0.5 * h * f
    return pos, vel


def flow_nbody(spec: PotentialSpec, state: NBodyState, t1: float, dt: float) -> NBodyState:
    """Advance an N-body state to ``t1`` (earlier or later) with velocity Verlet.

    The equations of motion are ``dX_m/dt = V_m`` and
    ``dV_m/dt = 1/(N-1) sum_{n != m} grad Gamma(X_n - X_m)``.
    """
    if not dt > 0:
        raise InvalidArgument("dt must be positive")
    pos, vel = verlet_batch(spec, state.positions, state.velocities, state.time, t1, dt)
    return NBodyState(pos, vel, t1, state.box_halfwidth)


def nbody_energy(spec: PotentialSpec, state: NBodyState) -> float:
    """``sum_m |v_m|^2 / 2 + 1/(2(N-1)) sum_{m != n} Gamma(x_m - x_n)``."""
    kin = 0.5 * float(np.sum(state.velocities**2))
    N = state.N
    if N < 2 or spec.is_zero:
        return kin
    pos = state.positions
    diff = pos[:, None, :] - pos[None, :, :]
    g = eval_derivatives(spec, diff[..., 0] if spec.d == 1 else diff, 0)
    origin = np.zeros(spec.d) if spec.d > 1 else 0.0
    pot = (float(np.sum(g)) - N * float(eval_derivatives(spec, origin, 0))) / (2 * (N - 1))
    return kin + pot


# ---------------------------------------------------------------------------
# mean-field flow


def _real_series(samples, L):
    """Coefficients ``a_m`` with ``f(x) = Re sum_m a_m exp(i m pi x / L)`` for real samples."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[-1]
    c = np.fft.rfft(samples, axis=-1) / n
    m = np.arange(c.shape[-1])
    weight = np.where((m == 0) | ((n % 2 == 0) & (m == n // 2)), 1.0, 2.0)
    # grid starts at -L: undo the offset so the series is in absolute x
    phase = np.exp(1j * m * math.pi)  # exp(-i m (pi/L) (-L))
    return c * weight * phase


def _truncate(coeffs, tol=1e-15):
    """Drop trailing modes whose magnitude is below ``tol`` times the largest one."""
    mags = np.abs(coeffs).max(axis=0)
    top = mags.max() if mags.size else 0.0
    if top == 0:
        return coeffs[:, :1]
    keep = np.flatnonzero(mags > tol * top)
    return np.ascontiguousarray(coeffs[:, : keep[-1] + 1])


@dataclass
class FieldHistory:
    """Force fields ``F(t, x)`` (and optionally ``k(t, x)``) on stored time slices.

    ``forces`` has shape ``(n_times, nx)``.  ``k_fields`` holds the real
    function ``k`` with ``K = i k`` when the purely imaginary transport
    coefficient is needed.  Densities are kept for reporting.
    """

    times: np.ndarray
    forces: np.ndarray
    box_halfwidth: float = math.pi
    k_fields: np.ndarray = None
    densities: np.ndarray = None
    _fcoef: np.ndarray = field(default=None, repr=False)
    _kcoef: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.forces = np.asarray(self.forces, dtype=float)
        if self.times.ndim != 1 or self.forces.shape[0] != self.times.size:
            raise InvalidArgument("need one force slice per time")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise InvalidArgument("history times must be strictly increasing")
        L = self.box_halfwidth
        self._fcoef = _truncate(_real_series(self.forces, L))
        if self.k_fields is not None:
            self.k_fields = np.asarray(self.k_fields, dtype=float)
            if self.k_fields.shape != self.forces.shape:
                raise InvalidArgument("K fields must share the force grid")
            self._kcoef = _truncate(_real_series(self.k_fields, L))

    @classmethod
    def constant(cls, force_samples, t_start, t_end, box_halfwidth=math.pi):
        f = np.asarray(force_samples, dtype=float)
        return cls(np.array([t_start, t_end]), np.stack([f, f]), box_halfwidth)

    @property
    def nx(self):
        return self.forces.shape[1]

    def _coeffs_at(self, coef, t):
        times = self.times
        lo, hi = times[0], times[-1]
        tol = 1e-12 * max(1.0, abs(hi - lo))
        if np.any(t < lo - tol) or np.any(t > hi + tol):
            raise OutOfRange(f"time outside stored range [{lo}, {hi}]")
        if times.size == 1:
            return coef[0]
        i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 2))
        s = (t - times[i]) / (times[i + 1] - times[i])
        return (1 - s) * coef[i] + s * coef[i + 1]

    def _eval(self, coef, t, x):
        c = self._coeffs_at(coef, t)
        m = np.arange(c.size)
        phase = np.exp(1j * (math.pi / self.box_halfwidth) * np.multiply.outer(np.asarray(x), m))
        return (phase @ c).real

    def force(self, t, x):
        """Force at time ``t`` and positions ``x``: linear in t, trigonometric in x."""
        return self._eval(self._fcoef, t, x)

    def k(self, t, x):
        if self._kcoef is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self._eval(self._kcoef, t, x)


def flow_meanfield(history: FieldHistory, z, t0: float, t1: float, dt: float):
    """Integrate ``dX/dt = V, dV/dt = F(t, X)`` from ``t0`` to ``t1``.

    ``z`` is a ``(position, velocity)`` pair of scalars or equally shaped
    arrays.  Positions are returned unwrapped.
    """
    lo, hi = history.times[0], history.times[-1]
    tol = 1e-12 * max(1.0, hi - lo)
    for t in (t0, t1):
        if t < lo - tol or t > hi + tol:
            raise OutOfRange(f"time {t} outside history range [{lo}, {hi}]")
    x = np.array(z[0], dtype=float)
    v = np.array(z[1], dtype=float)
    t = float(t0)
    f = history.force(t, x)
    for h in step_schedule(t0, t1, dt):
        v = v + 0.5 * h * f
        x = x + h * v
        t = t + h
        t_eval = min(max(t, lo), hi)
        f = history.force(t_eval, x)
        v = v + 0.5 * h * f
    return x, v


@numba.njit(cache=True, fastmath=True)
def _series_pair(cr, ci, x, kx):
    # real parts of two series sharing the powers of exp(i kx x); cr/ci have shape (m, 2)
    c = math.cos(kx * x)
    s = math.sin(kx * x)
    a = cr[0, 0]
    b = cr[0, 1]
    pr = c
    pi = s
    for m in range(1, cr.shape[0]):
        a += cr[m, 0] * pr - ci[m, 0] * pi
        b += cr[m, 1] * pr - ci[m, 1] * pi
        pr, pi = pr * c - pi * s, pr * s + pi * c
    return a, b


@numba.njit(cache=True, fastmath=True)
def _backward_kernel(x0, v0, cr, ci, dt, kx):
    n_t = cr.shape[0]
    P = x0.shape[0]
    fx = np.empty((n_t, P))
    fv = np.empty((n_t, P))
    acc = np.empty((n_t, P))
    half = 0.5 * dt
    for p in range(P):
        fx[0, p] = x0[p]
        fv[0, p] = v0[p]
        acc[0, p] = 0.0
        for i in range(1, n_t):
            x = x0[p]
            v = v0[p]
            f_here, k_here = _series_pair(cr[i], ci[i], x, kx)
            s = 0.0
            for j in range(i, 0, -1):
                v -= half * f_here
                x -= dt * v
                f_new, k_new = _series_pair(cr[j - 1], ci[j - 1], x, kx)
                v -= half * f_new
                s += half * (k_here + k_new)
                f_here = f_new
                k_here = k_new
            fx[i, p] = x
            fv[i, p] = v
            acc[i, p] = s
    return fx, fv, acc


def backward_transport(x0, v0, fcoef, kcoef, dt, kx):
    """Backward characteristics from every slice to time zero.

    For each start slice ``i`` and point ``p`` integrates the mean-field
    system from ``t_i`` down to ``0`` with Verlet steps of ``-dt`` that hit the
    stored slices exactly, and accumulates the trapezoid rule integral of
    ``k`` along the path.  ``fcoef`` and ``kcoef`` hold per-slice series
    coefficients ``f = Re sum_m c_m exp(i m kx x)``.  Returns foot positions,
    foot velocities and the accumulated integrals, each of shape
    ``(n_slices, n_points)``.
    """
    fcoef = np.asarray(fcoef, dtype=complex)
    kcoef = np.asarray(kcoef, dtype=complex)
    if fcoef.shape[0] != kcoef.shape[0]:
        raise InvalidArgument("force and k histories must have the same number of slices")
    m = max(fcoef.shape[1], kcoef.shape[1])
    both = np.zeros((fcoef.shape[0], m, 2), dtype=complex)
    both[:, :fcoef.shape[1], 0] = fcoef
    both[:, :kcoef.shape[1], 1] = kcoef
    x0 = np.ascontiguousarray(x0, dtype=float)
    v0 = np.ascontiguousarray(v0, dtype=float)
    return _backward_kernel(x0, v0, np.ascontiguousarray(both.real),
                            np.ascontiguousarray(both.imag), float(dt), float(kx))


def flow_jacobian_fd(flow, z, h: float = 1e-5):
    """Central finite-difference Jacobian of a flow map.

    ``flow`` maps arrays of phase points of shape ``(B, 2d)`` to arrays of the
    same shape; ``z`` is one point ``(2d,)`` or a batch ``(B, 2d)``.
    """
    if not h > 0:
        raise InvalidArgument("finite-difference step must be positive")
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    zb = np.atleast_2d(z)
    B, n = zb.shape
    eye = np.eye(n) * h
    plus = (zb[:, None, :] + eye[None]).reshape(-1, n)
    minus = (zb[:, None, :] - eye[None]).reshape(-1, n)
    fp = np.asarray(flow(plus)).reshape(B, n, n)
    fm = np.asarray(flow(minus)).reshape(B, n, n)
    jac = np.swapaxes((fp - fm) / (2 * h), 1, 2)  # jac[b, i, a] = d out_i / d z_a
    return jac[0] if single else jac


def nbody_flow_map(spec: PotentialSpec, N: int, t0: float, t1: float, dt: float):
    """Flow map of the N-body system acting on flat ``(x_1..x_N, v_1..v_N)`` arrays (d = 1)."""

    def flow(zs):
        zs = np.asarray(zs, dtype=float)
        pos, vel = verlet_batch(spec, zs[:, :N, None], zs[:, N:, None], t0, t1, dt)
        return np.concatenate([pos[..., 0], vel[..., 0]], axis=1)

    return flow


def meanfield_flow_map(history: FieldHistory, t0: float, t1: float, dt: float):
    """Flow map of the one-particle mean-field system acting on ``(x, v)`` rows."""

    def flow(zs):
        zs = np.asarray(zs, dtype=float)
        x, v = flow_meanfield(history, (zs[:, 0], zs[:, 1]), t0, t1, dt)
        return np.stack([x, v], axis=1)

    return flow


def jacobian_max_norm(jac):
    """Largest spectral norm over a batch of Jacobian matrices."""
    jac = np.asarray(jac)
    if jac.ndim == 2:
        jac = jac[None]
    return float(np.max(np.linalg.norm(jac, ord=2, axis=(1, 2))))
