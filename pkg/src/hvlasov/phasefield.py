"""Phase-space grids, complex fields and the velocity Fourier transform.

A one-particle phase space is the torus ``[-L, L)^d x [-L2, L2)^d`` sampled
uniformly.  Array axes are ordered ``(x_1, .., x_d, p_1, .., p_d)`` where the
second coordinate is either a velocity ``v`` or its Fourier conjugate ``xi``.

The discrete velocity transform

.. math::

    \\hat\\alpha(x, \\xi_k) = (2\\pi)^{-d/2} \\sum_j \\alpha(x, v_j) e^{-i v_j \\xi_k} \\Delta v

maps a velocity grid of ``n`` points and spacing ``dv`` onto the conjugate grid
``xi_k = -pi/dv + k * 2 pi / (n dv)``.  It is exactly unitary with respect to
the rectangle-rule inner products on both grids.
"""

from dataclasses import dataclass
from enum import Enum
import math
import struct

import numpy as np
import scipy.fft as sfft

from .errors import InvalidArgument

try:
    import finufft as _finufft
except ImportError:  # pragma: no cover
    _finufft = None


class CoordinateKind(str, Enum):
    POSITION_VELOCITY = "PositionVelocity"
    POSITION_XI = "PositionXi"

    @property
    def code(self):
        return 0 if self is CoordinateKind.POSITION_VELOCITY else 1

    @classmethod
    def from_code(cls, code):
        return (cls.POSITION_VELOCITY, cls.POSITION_XI)[code]


def self_dual_halfwidth(n):
    """Second-coordinate half-width for which the velocity and xi grids coincide."""
    return math.sqrt(math.pi * n / 2.0)


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid on ``[-L, L)^d x [-L2, L2)^d``.

    ``counts`` and ``halfwidths`` list the ``2 d`` axes in array order.
    """

    d: int
    counts: tuple
    halfwidths: tuple
    kind: CoordinateKind = CoordinateKind.POSITION_VELOCITY

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        object.__setattr__(self, "halfwidths", tuple(float(h) for h in self.halfwidths))
        object.__setattr__(self, "kind", CoordinateKind(self.kind))
        if self.d < 1:
            raise InvalidArgument("dimension must be at least 1")
        if len(self.counts) != 2 * self.d or len(self.halfwidths) != 2 * self.d:
            raise InvalidArgument("need one count and one half-width per axis")
        for c in self.counts:
            if c < 8 or c & (c - 1):
                raise InvalidArgument(f"axis point counts must be powers of two >= 8, got {c}")
        if any(h <= 0 for h in self.halfwidths):
            raise InvalidArgument("half-widths must be positive")

    @classmethod
    def square(cls, n, x_halfwidth=math.pi, p_halfwidth=None, d=1,
               kind=CoordinateKind.POSITION_VELOCITY):
        """Grid with ``n`` points on every axis.

        ``p_halfwidth`` defaults to the self-dual value ``sqrt(pi n / 2)``.
        """
        if p_halfwidth is None:
            p_halfwidth = self_dual_halfwidth(n)
        return cls(d, (n,) * (2 * d), (x_halfwidth,) * d + (p_halfwidth,) * d, kind)

    @property
    def shape(self):
        return self.counts

    @property
    def size(self):
        return int(np.prod(self.counts))

    @property
    def x_axes(self):
        return tuple(range(self.d))

    @property
    def p_axes(self):
        return tuple(range(self.d, 2 * self.d))

    @property
    def spacings(self):
        return tuple(2 * h / n for h, n in zip(self.halfwidths, self.counts))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacings))

    @property
    def x_halfwidth(self):
        return self.halfwidths[0]

    def axis(self, i):
        """Coordinates along array axis ``i``."""
        h, n = self.halfwidths[i], self.counts[i]
        return -h + (2 * h / n) * np.arange(n)

    def mesh(self):
        return np.meshgrid(*[self.axis(i) for i in range(2 * self.d)], indexing="ij")

    def frequencies(self, i):
        """Angular wavenumbers of the FFT along array axis ``i`` (Nyquist signed negative)."""
        return 2 * np.pi * sfft.fftfreq(self.counts[i], d=self.spacings[i])

    def dual(self):
        """Grid reached by the velocity transform (or its inverse)."""
        kind = (CoordinateKind.POSITION_XI if self.kind is CoordinateKind.POSITION_VELOCITY
                else CoordinateKind.POSITION_VELOCITY)
        hw = list(self.halfwidths)
        for a in self.p_axes:
            hw[a] = math.pi * self.counts[a] / (2 * self.halfwidths[a])
        return PhaseGrid(self.d, self.counts, tuple(hw), kind)

    def same_as(self, other, rtol=1e-12):
        return (
            self.d == other.d
            and self.counts == other.counts
            and self.kind == other.kind
            and all(math.isclose(a, b, rel_tol=rtol) for a, b in zip(self.halfwidths, other.halfwidths))
        )


class ComplexField:
    """Immutable complex samples on a :class:`PhaseGrid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: PhaseGrid, values):
        values = np.array(values, dtype=complex, copy=True)
        if values.size != grid.size:
            raise InvalidArgument(f"expected {grid.size} values, got {values.size}")
        values = values.reshape(grid.shape)
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    def __repr__(self):
        return f"ComplexField({self.grid.kind.value}, shape={self.grid.shape})"

    @property
    def kind(self):
        return self.grid.kind

    def with_values(self, values):
        return ComplexField(self.grid, values)

    def inner(self, other):
        """L2 inner product, antilinear in the first slot."""
        _check_same_grid(self, other)
        return complex(np.vdot(self.values, other.values) * self.grid.cell_volume)

    def norm(self):
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.grid.cell_volume)

    def normalized(self):
        n = self.norm()
        if n == 0:
            raise InvalidArgument("cannot normalize the zero field")
        return ComplexField(self.grid, self.values / n)

    def distance(self, other, p=2):
        """L^p distance (p = 1 or 2) by rectangle-rule quadrature."""
        _check_same_grid(self, other)
        diff = np.abs(self.values - other.values)
        if p == 1:
            return float(np.sum(diff)) * self.grid.cell_volume
        return math.sqrt(float(np.sum(diff**2)) * self.grid.cell_volume)

    def density(self):
        """Real field ``|alpha|^2`` wrapped as a ComplexField."""
        return ComplexField(self.grid, np.abs(self.values) ** 2)


def _check_same_grid(a, b):
    if not a.grid.same_as(b.grid):
        raise InvalidArgument("fields live on different grids")


def _require_kind(field, kind):
    if field.kind is not kind:
        raise InvalidArgument(f"expected a {kind.value} field, got {field.kind.value}")


def _velocity_phases(n, hv):
    """Pre/post phase factors for the transform along one velocity axis.

    Returns ``(pre_j, post_k)`` such that ``alpha_hat = post * FFT(pre * alpha)``.
    """
    dv = 2 * hv / n
    v0 = -hv
    xi0 = -math.pi / dv
    dxi = 2 * math.pi / (n * dv)
    j = np.arange(n)
    pre = np.exp(-1j * j * dv * xi0)
    post = dv / math.sqrt(2 * math.pi) * np.exp(-1j * v0 * (xi0 + j * dxi))
    return pre, post


def _along(vec, axis, ndim):
    shape = [1] * ndim
    shape[axis] = vec.size
    return vec.reshape(shape)


def velocity_transform_array(values, grid, axes=None, inverse=False, workers=None):
    """Apply the (inverse) velocity transform of ``grid`` to raw arrays.

    ``axes`` selects the velocity axes of ``values`` to transform; by default
    the momentum axes of ``grid``.  ``grid`` must be the grid of the *input*.
    Used directly by the tensor-product solvers, which carry several particle
    blocks in one array.
    """
    if axes is None:
        axes = grid.p_axes
    out = np.asarray(values, dtype=complex)
    ndim = out.ndim
    p_counts = [grid.counts[a] for a in grid.p_axes]
    p_hws = [grid.halfwidths[a] for a in grid.p_axes]
    for i, ax in enumerate(axes):
        n = p_counts[i % len(p_counts)]
        hv = p_hws[i % len(p_hws)]
        if inverse:
            # input lives on the xi grid; recover the matching velocity half-width
            hv = math.pi * n / (2 * hv)
            pre, post = _velocity_phases(n, hv)
            out = sfft.ifft(out / _along(post, ax, ndim), axis=ax, workers=workers)
            out = out / _along(pre, ax, ndim)
        else:
            pre, post = _velocity_phases(n, hv)
            out = sfft.fft(out * _along(pre, ax, ndim), axis=ax, workers=workers)
            out = out * _along(post, ax, ndim)
    return out


def velocity_fourier(field: ComplexField) -> ComplexField:
    """Unitary Fourier transform in the velocity variables, ``v -> xi``."""
    _require_kind(field, CoordinateKind.POSITION_VELOCITY)
    out = velocity_transform_array(field.values, field.grid)
    return ComplexField(field.grid.dual(), out)


def inverse_velocity_fourier(field: ComplexField) -> ComplexField:
    """Inverse of :func:`velocity_fourier`, ``xi -> v``."""
    _require_kind(field, CoordinateKind.POSITION_XI)
    out = velocity_transform_array(field.values, field.grid, inverse=True)
    return ComplexField(field.grid.dual(), out)


def spectral_derivative(values, grid, axis, order=1):
    """Spectral derivative of raw grid samples along one array axis."""
    k = _along(grid.frequencies(axis), axis, values.ndim)
    return sfft.ifft((1j * k) ** order * sfft.fft(values, axis=axis), axis=axis)


def derivative(field: ComplexField, axis: int, order: int = 1) -> ComplexField:
    return field.with_values(spectral_derivative(field.values, field.grid, axis, order))


def gradient(field: ComplexField):
    """List of spectral partial derivatives along every axis."""
    return [spectral_derivative(field.values, field.grid, a) for a in range(2 * field.grid.d)]


def sobolev_norm(field: ComplexField, k: int) -> float:
    """Discrete ``W^{k,2}`` norm (velocity fields) or ``M^k`` norm (xi fields).

    The norm squared is ``sum_{j<=k} ||D^j alpha||^2`` with the full derivative
    tensor ``D^j`` measured in the Frobenius norm.  On a xi field the velocity
    derivatives are replaced by multiplication with ``xi``, so that the two
    norms agree exactly across :func:`velocity_fourier`.
    """
    if k not in (0, 1, 2):
        raise InvalidArgument(f"Sobolev order must be 0, 1 or 2, got {k}")
    grid = field.grid
    vals = field.values
    if k == 0:
        return field.norm()
    ndim = vals.ndim
    if grid.kind is CoordinateKind.POSITION_VELOCITY:
        spec_axes = tuple(range(2 * grid.d))
        coeffs = sfft.fftn(vals, axes=spec_axes)
        w2 = sum(_along(grid.frequencies(a), a, ndim) ** 2 for a in spec_axes)
    else:
        spec_axes = grid.x_axes
        coeffs = sfft.fftn(vals, axes=spec_axes)
        w2 = sum(_along(grid.frequencies(a), a, ndim) ** 2 for a in spec_axes)
        w2 = w2 + sum(_along(grid.axis(a), a, ndim) ** 2 for a in grid.p_axes)
    weight = 1.0 + w2 + (w2**2 if k == 2 else 0.0)
    n_spec = int(np.prod([grid.counts[a] for a in spec_axes]))
    total = float(np.sum(np.abs(coeffs) ** 2 * weight)) / n_spec
    return math.sqrt(total * grid.cell_volume)


def poisson_bracket(a: ComplexField, b: ComplexField) -> ComplexField:
    """Canonical bracket ``[a, b] = grad_x a . grad_v b - grad_v a . grad_x b``."""
    _require_kind(a, CoordinateKind.POSITION_VELOCITY)
    _require_kind(b, CoordinateKind.POSITION_VELOCITY)
    _check_same_grid(a, b)
    grid = a.grid
    out = np.zeros(grid.shape, dtype=complex)
    for i in range(grid.d):
        xa, va = grid.x_axes[i], grid.p_axes[i]
        out += spectral_derivative(a.values, grid, xa) * spectral_derivative(b.values, grid, va)
        out -= spectral_derivative(a.values, grid, va) * spectral_derivative(b.values, grid, xa)
    return ComplexField(grid, out)


def random_state(seed: int, grid: PhaseGrid, smoothness: int = 2) -> ComplexField:
    """Seeded random normalized field with a damped, band-limited spectrum.

    Modes with index ``|m_a| < n_a / 4`` on every axis carry independent
    complex Gaussian coefficients scaled by ``(1 + |m|)^-smoothness``.
    """
    if smoothness < 0:
        raise InvalidArgument("smoothness must be nonnegative")
    rng = np.random.default_rng(seed)
    shape = grid.shape
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    ndim = len(shape)
    m2 = np.zeros(shape)
    mask = np.ones(shape, dtype=bool)
    for a, n in enumerate(shape):
        m = _along(sfft.fftfreq(n, d=1.0 / n), a, ndim)
        m2 = m2 + m**2
        mask &= np.abs(m) < n / 4
    coeffs = np.where(mask, coeffs * (1.0 + np.sqrt(m2)) ** (-float(smoothness)), 0.0)
    values = sfft.ifftn(coeffs)
    return ComplexField(grid, values).normalized()


def interpolate(field: ComplexField, points, mode_tol=1e-15):
    """Trigonometric interpolation of a ``d = 1`` field at arbitrary phase points.

    ``points`` is an array of shape ``(..., 2)`` holding ``(x, p)`` pairs.
    Coordinates are taken modulo the periodic box.
    """
    return TrigInterpolant(field, mode_tol=mode_tol)(points)


class TrigInterpolant:
    """Band-limited interpolant of a ``d = 1`` field.

    Evaluation uses a type-2 non-uniform FFT (finufft) when available.  The
    fallback, ``method="direct"``, drops Fourier modes whose magnitude falls
    below ``mode_tol`` times the largest coefficient and sums the rest as a
    small dense matrix product, which is cheap for smooth data.
    """

    def __init__(self, field: ComplexField, mode_tol=1e-15, method="auto", eps=1e-14):
        grid = field.grid
        if grid.d != 1:
            raise InvalidArgument("interpolation is implemented for d = 1")
        if method not in ("auto", "nufft", "direct"):
            raise InvalidArgument(f"unknown interpolation method {method!r}")
        if method == "auto":
            method = "nufft" if _finufft is not None else "direct"
        if method == "nufft" and _finufft is None:
            raise InvalidArgument("finufft is not installed")
        self.method = method
        self.eps = eps
        nx, nv = grid.counts
        c = sfft.fft2(field.values) / (nx * nv)
        mx = sfft.fftfreq(nx, d=1.0 / nx)
        mv = sfft.fftfreq(nv, d=1.0 / nv)
        # split Nyquist coefficients symmetrically so real data interpolate to real values
        c, mx = _split_nyquist(c, mx, axis=0)
        c, mv = _split_nyquist(c, mv, axis=1)
        # centred (odd sized) mode array for the NUFFT
        full = np.zeros((nx + 1, nv + 1), dtype=complex)
        full[np.ix_(mx.astype(int) + nx // 2, mv.astype(int) + nv // 2)] = c
        self.full = full
        cmax = np.abs(c).max() if c.size else 0.0
        keep = np.abs(c) > mode_tol * cmax
        rows = np.flatnonzero(keep.any(axis=1))
        cols = np.flatnonzero(keep.any(axis=0))
        self.coeffs = np.ascontiguousarray(c[np.ix_(rows, cols)])
        self.mx = mx[rows]
        self.mv = mv[cols]
        self.x0 = -grid.halfwidths[0]
        self.v0 = -grid.halfwidths[1]
        self.kx = math.pi / grid.halfwidths[0]
        self.kv = math.pi / grid.halfwidths[1]

    def __call__(self, points, chunk=8192):
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 2)
        if self.method == "nufft":
            tx = np.mod(self.kx * (flat[:, 0] - self.x0) + math.pi, 2 * math.pi) - math.pi
            tv = np.mod(self.kv * (flat[:, 1] - self.v0) + math.pi, 2 * math.pi) - math.pi
            out = _finufft.nufft2d2(tx, tv, self.full, eps=self.eps, isign=1)
            return out.reshape(pts.shape[:-1])
        out = np.empty(flat.shape[0], dtype=complex)
        for s in range(0, flat.shape[0], chunk):
            x = flat[s:s + chunk, 0] - self.x0
            v = flat[s:s + chunk, 1] - self.v0
            ex = np.exp(1j * self.kx * np.outer(x, self.mx))
            ev = np.exp(1j * self.kv * np.outer(v, self.mv))
            out[s:s + chunk] = np.einsum("pi,pi->p", ex, ev @ self.coeffs.T)
        return out.reshape(pts.shape[:-1])


def _split_nyquist(c, m, axis):
    n = c.shape[axis]
    nyq = n // 2
    c = np.moveaxis(c, axis, 0)
    half = 0.5 * c[nyq]
    c = np.concatenate([c, half[None]], axis=0)
    c[nyq] = half
    m = np.concatenate([m, [float(nyq)]])
    return np.moveaxis(c, 0, axis), m


# ---------------------------------------------------------------------------
# binary snapshots

SNAPSHOT_MAGIC = b"HVLF"
SNAPSHOT_VERSION = 1
_PREAMBLE = struct.Struct("<4sIIBBxx")


def write_snapshot_arrays(path, grid: PhaseGrid, values, n_particles=1):
    """Write raw samples over ``n_particles`` copies of ``grid``.

    Layout (little endian): 16-byte preamble ``magic, version u32, d u32,
    kind u8, n_particles u8, 2 pad bytes``; then ``2 d n_particles`` u32 axis
    counts; then as many f64 half-widths; then interleaved f64 ``(re, im)``
    pairs in row-major order.
    """
    values = np.asarray(values, dtype="<c16")
    expected = grid.shape * n_particles
    if values.shape != expected:
        raise InvalidArgument(f"values shape {values.shape} does not match {expected}")
    with open(path, "wb") as fh:
        fh.write(_PREAMBLE.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.d, grid.kind.code, n_particles))
        fh.write(np.asarray(grid.counts * n_particles, dtype="<u4").tobytes())
        fh.write(np.asarray(grid.halfwidths * n_particles, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(values).tobytes())


def read_snapshot_header(path):
    """Return the decoded header of a snapshot file as a dict."""
    with open(path, "rb") as fh:
        raw = fh.read(_PREAMBLE.size)
        if len(raw) < _PREAMBLE.size:
            raise InvalidArgument("file too short for a snapshot header")
        magic, version, d, kind, n_particles = _PREAMBLE.unpack(raw)
        if magic != SNAPSHOT_MAGIC:
            raise InvalidArgument(f"bad magic {magic!r}")
        n_axes = 2 * d * n_particles
        counts = np.frombuffer(fh.read(4 * n_axes), dtype="<u4")
        halfwidths = np.frombuffer(fh.read(8 * n_axes), dtype="<f8")
    return {
        "magic": magic.decode(),
        "version": version,
        "d": d,
        "kind": CoordinateKind.from_code(kind).value,
        "n_particles": n_particles,
        "counts": [int(c) for c in counts],
        "halfwidths": [float(h) for h in halfwidths],
        "header_bytes": _PREAMBLE.size + 12 * n_axes,
    }


def read_snapshot_arrays(path):
    """Return ``(grid, values, n_particles)`` from a snapshot file."""
    hdr = read_snapshot_header(path)
    d, npart = hdr["d"], hdr["n_particles"]
    grid = PhaseGrid(d, hdr["counts"][: 2 * d], hdr["halfwidths"][: 2 * d],
                     CoordinateKind(hdr["kind"]))
    shape = tuple(hdr["counts"])
    with open(path, "rb") as fh:
        fh.seek(hdr["header_bytes"])
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != int(np.prod(shape)):
        raise InvalidArgument("snapshot payload size does not match its header")
    return grid, data.reshape(shape).astype(complex), npart


def save_snapshot(path, field: ComplexField):
    write_snapshot_arrays(path, field.grid, field.values, 1)


def load_snapshot(path) -> ComplexField:
    grid, values, npart = read_snapshot_arrays(path)
    if npart != 1:
        raise InvalidArgument("snapshot holds a multi-particle state")
    return ComplexField(grid, values)
