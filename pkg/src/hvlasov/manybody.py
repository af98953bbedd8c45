"""N-particle solutions.

* :func:`evaluate_liouville` evaluates the solution of the N-body Liouville
  equation for symmetric product data pointwise, by composing the initial
  datum with the backward N-body flow.
* :func:`solve_pseudo_schrodinger_pair` evolves a two-particle state on the
  full tensor grid (d = 1) with a Strang split-step scheme.
* :func:`mfc_residuals` checks the mean-field consistency inequalities of the
  two-body Hamiltonian on a discretised two-particle state.
"""

import math
import warnings

import numpy as np
import scipy.fft as sfft

from .characteristics import verlet_batch
from .errors import InvalidArgument
from .meanfield.bounds import mfc_constants
from .meanfield.common import SolverParams, time_slices
from .phasefield import (ComplexField, CoordinateKind, PhaseGrid, TrigInterpolant,
                         _velocity_phases, read_snapshot_arrays, velocity_transform_array,
                         write_snapshot_arrays)
from .potential import PotentialSpec, eval_derivatives, potential_constant

try:
    import pyfftw
except ImportError:  # pragma: no cover
    pyfftw = None


class ProductInitialData:
    """Symmetric product datum ``a0(z_1) a0(z_2) ... a0(z_N)``."""

    def __init__(self, factor: ComplexField, N: int):
        if factor.kind is not CoordinateKind.POSITION_VELOCITY or factor.grid.d != 1:
            raise InvalidArgument("the factor must be a d = 1 position-velocity field")
        if int(N) != N or N < 2:
            raise InvalidArgument("N must be an integer >= 2")
        norm = factor.norm()
        if norm == 0:
            raise InvalidArgument("the factor is zero")
        if abs(norm - 1) > 1e-12:
            warnings.warn(f"factor has norm {norm:.6g}; rescaling to 1", stacklevel=2)
            factor = factor.normalized()
        self.factor = factor
        self.N = int(N)
        self.interp = TrigInterpolant(factor)

    def __call__(self, points):
        """Values at points of shape ``(..., N, 2)`` holding ``(x_m, v_m)`` rows."""
        pts = np.asarray(points, dtype=float)
        if pts.shape[-2:] != (self.N, 2):
            raise InvalidArgument(f"points must end in shape ({self.N}, 2)")
        vals = self.interp(pts)
        return np.prod(vals, axis=-1)

    def one_particle(self, points):
        return self.interp(np.asarray(points, dtype=float))


def evaluate_liouville(data: ProductInitialData, spec: PotentialSpec, t: float, points, dt: float):
    """Solution of the N-body Liouville equation at time ``t``.

    Each point (shape ``(N, 2)``; a batch has shape ``(..., N, 2)``) is
    carried back to time zero by the N-body velocity Verlet flow and the
    product datum is evaluated at the foot point.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[-2:] != (data.N, 2):
        raise InvalidArgument(f"points must end in shape ({data.N}, 2)")
    if spec.d != 1:
        raise InvalidArgument("evaluate_liouville is implemented for d = 1")
    pos, vel = verlet_batch(spec, pts[..., 0:1], pts[..., 1:2], t, 0.0, dt)
    foot = np.concatenate([pos, vel], axis=-1)
    return data(foot)


# ---------------------------------------------------------------------------
# two-particle states


def _swap(values):
    return np.transpose(values, (2, 3, 0, 1))


class PairState:
    """Two-particle field on the tensor product of one d = 1 grid with itself.

    ``values`` has axes ``(x1, p1, x2, p2)`` where ``p`` is velocity or xi
    depending on ``grid.kind``.  On construction the state is checked for swap
    symmetry and normalised (with a warning if that changes it).
    """

    def __init__(self, grid: PhaseGrid, values, check=True, sym_tol=1e-10):
        if grid.d != 1:
            raise InvalidArgument("pair states are implemented for d = 1")
        values = np.asarray(values, dtype=complex)
        if values.shape != grid.shape * 2:
            raise InvalidArgument(f"values must have shape {grid.shape * 2}")
        self.grid = grid
        if check:
            norm = math.sqrt(float(np.vdot(values, values).real) * grid.cell_volume**2)
            if norm == 0:
                raise InvalidArgument("pair state is zero")
            if abs(norm - 1) > 1e-12:
                warnings.warn(f"pair state has norm {norm:.6g}; rescaling to 1", stacklevel=2)
                values = values / norm
            asym = float(np.max(np.abs(values - _swap(values)))) if values.size else 0.0
            if asym > sym_tol * max(1.0, float(np.abs(values).max())):
                raise InvalidArgument(f"pair state is not swap symmetric (residual {asym:.3g})")
        self.values = values

    @property
    def kind(self):
        return self.grid.kind

    @classmethod
    def product(cls, a: ComplexField, b: ComplexField = None):
        """``a (x) a``, or the normalised symmetrisation of ``a (x) b``."""
        if b is None:
            return cls(a.grid, np.multiply.outer(a.values, a.values), check=False)
        if not a.grid.same_as(b.grid):
            raise InvalidArgument("factors live on different grids")
        ab = np.multiply.outer(a.values, b.values)
        vals = ab + _swap(ab)
        norm = math.sqrt(float(np.vdot(vals, vals).real) * a.grid.cell_volume**2)
        return cls(a.grid, vals / norm)

    def inner(self, other):
        return complex(np.vdot(self.values, other.values)) * self.grid.cell_volume**2

    def norm(self):
        return math.sqrt(float(np.vdot(self.values, self.values).real) * self.grid.cell_volume**2)

    def distance(self, other):
        diff = self.values - other.values
        return math.sqrt(float(np.vdot(diff, diff).real) * self.grid.cell_volume**2)

    def swap_residual(self):
        return float(np.max(np.abs(self.values - _swap(self.values))))

    def to_xi(self):
        if self.kind is CoordinateKind.POSITION_XI:
            return self
        vals = velocity_transform_array(self.values, self.grid, axes=(1, 3))
        return PairState(self.grid.dual(), vals, check=False)

    def to_velocity(self):
        if self.kind is CoordinateKind.POSITION_VELOCITY:
            return self
        vals = velocity_transform_array(self.values, self.grid, axes=(1, 3), inverse=True)
        return PairState(self.grid.dual(), vals, check=False)

    def save(self, path):
        write_snapshot_arrays(path, self.grid, self.values, n_particles=2)

    @classmethod
    def load(cls, path):
        grid, values, npart = read_snapshot_arrays(path)
        if npart != 2:
            raise InvalidArgument("snapshot does not hold a two-particle state")
        return cls(grid, values, check=False)


def random_pair_state(seed: int, grid: PhaseGrid, smoothness: int = 2) -> PairState:
    """Smooth random symmetric two-particle state (band-limited, normalised)."""
    rng = np.random.default_rng(seed)
    shape = grid.shape * 2
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    damp = np.ones(shape)
    for ax in range(4):
        n = shape[ax]
        m = np.abs(sfft.fftfreq(n, d=1.0 / n))
        w = np.where(m < n / 4, (1.0 + m) ** (-float(smoothness)), 0.0)
        damp = damp * w.reshape([-1 if i == ax else 1 for i in range(4)])
    vals = sfft.ifftn(coeffs * damp)
    vals = vals + _swap(vals)
    norm = math.sqrt(float(np.vdot(vals, vals).real) * grid.cell_volume**2)
    return PairState(grid, vals / norm)


# ---------------------------------------------------------------------------
# pseudo Schroedinger pair solver


class _FFT4:
    """In-place 4D FFT pair on one aligned buffer (pyfftw when available)."""

    def __init__(self, shape, threads=None):
        self.threads = threads or 1
        if pyfftw is not None:
            self.buf = pyfftw.empty_aligned(shape, dtype="complex128")
            flags = ("FFTW_ESTIMATE", "FFTW_DESTROY_INPUT")
            self._fwd = pyfftw.FFTW(self.buf, self.buf, axes=(0, 1, 2, 3), direction="FFTW_FORWARD",
                                    flags=flags, threads=self.threads)
            self._bwd = pyfftw.FFTW(self.buf, self.buf, axes=(0, 1, 2, 3), direction="FFTW_BACKWARD",
                                    flags=flags, threads=self.threads)
        else:
            self.buf = np.empty(shape, dtype=complex)
            self._fwd = self._bwd = None

    def forward(self):
        if self._fwd is not None:
            self._fwd.execute()
        else:
            self.buf[...] = sfft.fftn(self.buf, overwrite_x=True, workers=self.threads)

    def backward_unnormalized(self):
        if self._bwd is not None:
            self._bwd.execute()
        else:
            self.buf[...] = sfft.ifftn(self.buf, overwrite_x=True, workers=self.threads, norm="forward")


def pair_memory_estimate(grid: PhaseGrid, n_snapshots: int = 0) -> int:
    """Bytes needed by the pair solver: state, interaction phase, scratch and snapshots."""
    per = 16 * int(np.prod(grid.shape)) ** 2
    return per * (3 + n_snapshots)


def kinetic_multiplier(grid: PhaseGrid, tau: float):
    """One-particle kinetic propagator ``exp(-i tau d_x d_xi)`` as a 2D DFT multiplier.

    Acts on ``a / post`` where ``post`` is the output phase of the velocity
    transform; see :class:`PairPropagator`.
    """
    vgrid = grid.dual()
    nv = grid.counts[1]
    kx = grid.frequencies(0)
    v = vgrid.axis(1)
    v_rev = v[(-np.arange(nv)) % nv]
    return np.exp(-1j * tau * np.outer(kx, v_rev))


class PairPropagator:
    """Split-step pieces for the two-particle pseudo Schroedinger equation

        i d/dt a = (d_x1 d_xi1 + d_x2 d_xi2 + V(z1 - z2)) a,   V(x, xi) = -Gamma'(x) xi.

    The kinetic operator ``d_x d_xi`` is a constant coefficient operator, so
    after removing the linear ``xi`` phase of the velocity transform it is a
    plain multiplier in the full 4D DFT.
    """

    def __init__(self, grid: PhaseGrid, spec: PotentialSpec, dt: float, threads=None):
        if grid.kind is not CoordinateKind.POSITION_XI:
            raise InvalidArgument("the pair solver works on position-xi grids")
        self.grid = grid
        self.spec = spec
        self.dt = dt
        nv = grid.counts[1]
        _, post = _velocity_phases(nv, grid.dual().halfwidths[1])
        self.post = post
        n_total = int(np.prod(grid.shape)) ** 2
        self.half = kinetic_multiplier(grid, dt / 2) / math.sqrt(n_total)
        self.full = kinetic_multiplier(grid, dt) / math.sqrt(n_total)
        x = grid.axis(0)
        xi = grid.axis(1)
        self.phase = None
        if not spec.is_zero:
            dgamma = eval_derivatives(spec, x[:, None] - x[None, :], 1)  # (x1, x2)
            e = np.exp(1j * dt * dgamma[:, None, :] * xi[None, :, None])  # (x1, xi, x2)
            # exp(-i dt V(z1 - z2)) = exp(i dt Gamma'(x1 - x2) xi1) exp(-i dt Gamma'(x1 - x2) xi2)
            self.phase = e[:, :, :, None] * np.conj(e.transpose(0, 2, 1))[:, None, :, :]
        self.fft = _FFT4(grid.shape * 2, threads)

    def load(self, values):
        post = self.post
        self.fft.buf[...] = values / (post[None, :, None, None] * post[None, None, None, :])

    def unload(self):
        post = self.post
        return self.fft.buf * (post[None, :, None, None] * post[None, None, None, :])

    def kinetic(self, mult):
        b = self.fft.buf
        self.fft.forward()
        b *= mult[:, :, None, None]
        b *= mult[None, None, :, :]
        self.fft.backward_unnormalized()

    def interaction(self):
        if self.phase is not None:
            self.fft.buf *= self.phase


class PairTrajectory:
    """Recorded pair states plus the final state of a run."""

    def __init__(self, times, states, info, final):
        self.times = times
        self.states = states
        self.info = info
        self.final = final


def solve_pseudo_schrodinger_pair(initial: PairState, spec: PotentialSpec, T: float,
                                  params: SolverParams, record_steps=None, observe=None,
                                  keep=True, direction=1, memory_budget=2 * 1024**3,
                                  threads=None) -> PairTrajectory:
    """Strang split-step evolution of a symmetric two-particle state.

    Steps are kinetic(dt/2), interaction(dt), kinetic(dt/2), with the inner
    kinetic half steps of consecutive steps merged.  States are recorded at
    multiples of ``params.snapshot_stride`` (and the final step), or at the
    explicit step indices ``record_steps``.  ``observe(t, state)`` is called on
    every recorded state; with ``keep=False`` the states are not stored.
    """
    if initial.kind is not CoordinateKind.POSITION_XI:
        raise InvalidArgument("initial pair state must live on a position-xi grid")
    if spec.d != 1 or not math.isclose(spec.box_halfwidth, initial.grid.x_halfwidth, rel_tol=1e-12):
        raise InvalidArgument("potential box does not match the pair grid")
    if direction not in (1, -1):
        raise InvalidArgument("direction must be +1 or -1")
    n, dt = time_slices(T, params.dt)
    if record_steps is None:
        rec = set(range(0, n + 1, params.snapshot_stride)) | {n}
    else:
        rec = {int(s) for s in record_steps if 0 <= s <= n}
    need = pair_memory_estimate(initial.grid, len(rec) if keep else 0)
    if need > memory_budget:
        raise InvalidArgument(f"pair solver needs about {need / 2**20:.0f} MiB, "
                              f"budget is {memory_budget / 2**20:.0f} MiB")
    h = direction * dt
    prop = PairPropagator(initial.grid, spec, h, threads)
    grid = initial.grid
    times, states = [], []

    def record(step, values):
        st = PairState(grid, values, check=False)
        if observe is not None:
            observe(direction * step * dt, st)
        if keep:
            times.append(direction * step * dt)
            states.append(st)

    if 0 in rec:
        record(0, np.array(initial.values))
    prop.load(initial.values)
    if n > 0:
        prop.kinetic(prop.half)
    for step in range(1, n + 1):
        prop.interaction()
        if step == n or step in rec:
            prop.kinetic(prop.half)
            if step in rec:
                record(step, prop.unload())
            if step < n:
                prop.kinetic(prop.half)
        else:
            prop.kinetic(prop.full)
    final_values = prop.unload() if n > 0 else np.array(initial.values)
    info = {"dt": dt, "steps": n, "solver": "pseudo-schrodinger-pair",
            "fft": "pyfftw" if pyfftw is not None else "scipy"}
    return PairTrajectory(times, states, info, PairState(grid, final_values, check=False))


# ---------------------------------------------------------------------------
# mean-field consistency


def _pair_derivative(values, grid, axis, order=1):
    k = grid.frequencies(axis % 2)
    shape = [1] * 4
    shape[axis] = -1
    return sfft.ifft((1j * k.reshape(shape)) ** order * sfft.fft(values, axis=axis), axis=axis)


def pair_derivative_norms(state: PairState):
    """``(||grad_{z1} a||, ||D^2_{(z1, z2)} a||)`` of a pair state in velocity form.

    The second derivative is the full 4x4 Hessian in the Frobenius norm.
    """
    st = state.to_velocity()
    g = st.grid
    vol = g.cell_volume**2
    first = [_pair_derivative(st.values, g, a) for a in range(4)]
    n1 = sum(float(np.vdot(first[a], first[a]).real) for a in (0, 1)) * vol
    n2 = 0.0
    for a in range(4):
        for b in range(a, 4):
            dab = _pair_derivative(first[a], g, b)
            w = 1.0 if a == b else 2.0
            n2 += w * float(np.vdot(dab, dab).real) * vol
    return math.sqrt(n1), math.sqrt(n2)


def mfc_residuals(spec: PotentialSpec, state: PairState, N_formal: int = 2, c_gamma=None):
    """Both sides of the three mean-field consistency inequalities.

    The Hamiltonian is the two-particle part of the N-body Hamiltonian,
    ``v1^2/2 + v2^2/2 + Gamma(x1 - x2) / (N_formal - 1)``, and ``state`` is a
    symmetric two-particle field (converted to velocity form).  Returns a
    dict with ``lhs``, ``rhs`` and ``residuals = rhs - lhs`` (three entries
    each) plus the constants used.
    """
    if N_formal < 2:
        raise InvalidArgument("N_formal must be at least 2")
    if spec.d != 1:
        raise InvalidArgument("mfc_residuals is implemented for d = 1")
    st = state.to_velocity()
    g = st.grid
    a = st.values
    vol = g.cell_volume**2
    if c_gamma is None:
        c_gamma = potential_constant(spec)
    C1, C2, C3 = mfc_constants(c_gamma, 1)
    c = 1.0 / (N_formal - 1)
    x = g.axis(0)
    dx12 = x[:, None, None, None] - x[None, None, :, None]
    g2 = c * eval_derivatives(spec, dx12, 2)
    g3 = c * eval_derivatives(spec, dx12, 3)

    def nsq(f):
        return float(np.vdot(f, f).real) * vol

    d = [_pair_derivative(a, g, ax) for ax in range(4)]  # x1, v1, x2, v2
    grad1 = math.sqrt(nsq(d[0]) + nsq(d[1]))
    hess = [[_pair_derivative(d[i], g, j) for j in range(4)] for i in range(4)]
    hess_norm = math.sqrt(sum(nsq(hess[i][j]) for i in range(4) for j in range(4)))

    # {grad_{z1} H, a}: components {c Gamma'(x12), a} and {v1, a}
    lhs1 = math.sqrt(nsq(d[0]) + nsq(g2 * (d[1] - d[3])))
    # {D^2 H, a}: four Hessian entries equal to +-c Gamma''(x12)
    lhs2 = math.sqrt(4 * nsq(g3 * (d[1] - d[3])))
    # {grad H, grad a}: rows dH/dx1 = c Gamma', dH/dx2 = -c Gamma', dH/dv_i = v_i
    s3 = 0.0
    for b in range(4):
        s3 += 2 * nsq(g2 * (hess[b][1] - hess[b][3]))
        s3 += nsq(hess[b][0]) + nsq(hess[b][2])
    lhs3 = math.sqrt(s3)
    lhs = [lhs1, lhs2, lhs3]
    rhs = [C1 * grad1, C2 * grad1, C3 * hess_norm]
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residuals": [r - l for l, r in zip(lhs, rhs)],
        "constants": {"C_gamma": c_gamma, "C1": C1, "C2": C2, "C3": C3},
    }
