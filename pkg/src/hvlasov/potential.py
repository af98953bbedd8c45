"""Even pair potentials on the periodic box [-L, L)^d.

Three kinds are supported: the zero potential, a cosine potential
``A * sum_i cos(kappa x_i)`` and a periodicized isotropic Gaussian
``A * sum_n exp(-|x + 2 L n|^2 / (2 w^2))``.  All kinds are smooth and even,
with bounded derivatives up to third order.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy import optimize

from .errors import InvalidArgument

WRAP_TOLERANCE = 1e-15


class PotentialKind(str, Enum):
    ZERO = "zero"
    COSINE = "cosine"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class PotentialSpec:
    """Pair interaction potential on the torus of half-width ``box_halfwidth``."""

    kind: PotentialKind = PotentialKind.ZERO
    amplitude: float = 0.0
    wavenumber: float = 1.0
    width: float = 1.0
    box_halfwidth: float = math.pi
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))
        if self.box_halfwidth <= 0:
            raise InvalidArgument("box_halfwidth must be positive")
        if self.d < 1:
            raise InvalidArgument("dimension must be at least 1")
        if self.kind is PotentialKind.COSINE:
            # the cosine must be periodic on [-L, L)
            cycles = self.wavenumber * self.box_halfwidth / math.pi
            if abs(cycles - round(cycles)) > 1e-9:
                raise InvalidArgument(
                    "cosine wavenumber must be a multiple of pi / box_halfwidth"
                )
        if self.kind is PotentialKind.GAUSSIAN and self.width <= 0:
            raise InvalidArgument("gaussian width must be positive")

    @classmethod
    def zero(cls, box_halfwidth=math.pi, d=1):
        return cls(PotentialKind.ZERO, 0.0, box_halfwidth=box_halfwidth, d=d)

    @classmethod
    def cosine(cls, amplitude=1.0, wavenumber=1.0, box_halfwidth=math.pi, d=1):
        return cls(PotentialKind.COSINE, amplitude, wavenumber=wavenumber,
                   box_halfwidth=box_halfwidth, d=d)

    @classmethod
    def gaussian(cls, amplitude=1.0, width=1.0, box_halfwidth=math.pi, d=1):
        return cls(PotentialKind.GAUSSIAN, amplitude, width=width,
                   box_halfwidth=box_halfwidth, d=d)

    @property
    def is_zero(self):
        return self.kind is PotentialKind.ZERO or self.amplitude == 0.0

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "amplitude": self.amplitude,
            "wavenumber": self.wavenumber,
            "width": self.width,
            "box_halfwidth": self.box_halfwidth,
            "d": self.d,
        }


def _wrap_count(width, L):
    """Number of periodic images per side so that dropped terms are below tolerance."""
    n = 1
    # the nearest dropped image sits at distance >= (2n + 1) L - L = 2 n L;
    # allow a polynomial prefactor up to third order
    while True:
        r = 2.0 * n * L
        if math.exp(-r * r / (2 * width * width)) * (1 + (r / width**2) ** 3) < WRAP_TOLERANCE:
            return n
        n += 1


def _gaussian_1d(spec, y):
    """Wrapped 1D Gaussian profile and its first three derivatives."""
    w2 = spec.width**2
    L = spec.box_halfwidth
    n = _wrap_count(spec.width, L)
    h = np.zeros((4,) + y.shape)
    for k in range(-n, n + 1):
        s = y + 2.0 * L * k
        g = np.exp(-s * s / (2 * w2))
        h[0] += g
        h[1] += -s / w2 * g
        h[2] += (s * s / w2**2 - 1.0 / w2) * g
        h[3] += (-(s**3) / w2**3 + 3.0 * s / w2**2) * g
    return h


def _cosine_1d(spec, y, order):
    A, kap = spec.amplitude, spec.wavenumber
    ky = kap * y
    return A * kap**order * (np.cos, lambda u: -np.sin(u), lambda u: -np.cos(u), np.sin)[order](ky)


def eval_derivatives(spec: PotentialSpec, x, order: int):
    """Evaluate the ``order``-th derivative tensor of the potential at ``x``.

    For ``d == 1`` the input may have any shape and the output has the same
    shape.  For ``d > 1`` the last axis of ``x`` holds the coordinates and the
    result carries ``order`` trailing axes of length ``d``.
    """
    if order not in (0, 1, 2, 3):
        raise InvalidArgument(f"derivative order must be in 0..3, got {order}")
    x = np.asarray(x, dtype=float)
    d = spec.d
    if d > 1 and (x.ndim == 0 or x.shape[-1] != d):
        raise InvalidArgument(f"expected trailing axis of length {d}")
    pts = x[..., None] if d == 1 else x
    out_shape = pts.shape[:-1] + (d,) * order

    if spec.is_zero:
        out = np.zeros(out_shape)
    elif spec.kind is PotentialKind.COSINE:
        # separable sum: only the fully diagonal tensor entries survive
        out = np.zeros(out_shape)
        for i in range(d):
            val = _cosine_1d(spec, pts[..., i], order)
            if order == 0:
                out += val
            else:
                out[(Ellipsis,) + (i,) * order] = val
    else:
        # isotropic product of wrapped 1D profiles
        h = _gaussian_1d(spec, np.moveaxis(pts, -1, 0))  # (4, d, ...)
        out = np.zeros(out_shape)
        for idx in np.ndindex(*((d,) * order)):
            counts = np.bincount(np.asarray(idx, dtype=int), minlength=d)
            val = spec.amplitude * np.ones(pts.shape[:-1])
            for i in range(d):
                val = val * h[counts[i], i]
            out[(Ellipsis,) + idx] = val

    if d == 1:
        out = out.reshape(x.shape)
    return out


def _tensor_norm(t, d, order):
    if d == 1:
        return np.abs(t)
    return np.sqrt(np.sum(np.abs(t) ** 2, axis=tuple(range(-order, 0))))


def potential_constant(spec: PotentialSpec, oversample_points: int = 1024) -> float:
    """Largest sup-norm over the derivative orders 1..3.

    Tensor sup-norms use the Frobenius norm, which equals the absolute value
    for ``d == 1``.  Closed forms are used for the zero and cosine kinds; the
    Gaussian kind is sampled on a fine grid and, for ``d == 1``, the sampled
    maximum is polished with a bounded scalar search.
    """
    if spec.is_zero:
        return 0.0
    d = spec.d
    if spec.kind is PotentialKind.COSINE:
        A, k = abs(spec.amplitude), spec.wavenumber
        return float(max(A * k, A * k**2, A * k**3) * math.sqrt(d))

    L = spec.box_halfwidth
    per_axis = oversample_points if d == 1 else max(16, int(round(2e5 ** (1.0 / d))))
    axis = -L + 2 * L * np.arange(per_axis) / per_axis
    if d == 1:
        pts = axis
    else:
        pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    best = 0.0
    for order in (1, 2, 3):
        vals = _tensor_norm(eval_derivatives(spec, pts, order), d, order)
        i = int(np.argmax(vals))
        best = max(best, float(vals[i]))
        if d == 1:
            h = 2 * L / per_axis
            res = optimize.minimize_scalar(
                lambda y: -abs(float(eval_derivatives(spec, y, order))),
                bounds=(axis[i] - h, axis[i] + h),
                method="bounded",
                options={"xatol": 1e-12},
            )
            best = max(best, -float(res.fun))
    return best


def _kernel_samples(spec, n, order):
    """Kernel derivative sampled at the circular offsets m*dx, m = 0..n-1 per axis."""
    L = spec.box_halfwidth
    d = spec.d
    offs = 2 * L * np.arange(n) / n
    if d == 1:
        return eval_derivatives(spec, offs, order)
    grids = np.meshgrid(*([offs] * d), indexing="ij")
    return eval_derivatives(spec, np.stack(grids, axis=-1), order)


def convolve(spec: PotentialSpec, rho, order: int, x_halfwidth=None):
    """Periodic convolution ``(D^order Gamma) * rho`` on the uniform x-grid.

    ``rho`` holds samples on the grid ``x_j = -L + j dx`` (one array axis per
    spatial dimension).  The result is computed with FFTs and coincides with
    the rectangle-rule quadrature ``sum_j D^order Gamma(x_i - x_j) rho_j dx^d``.
    Tensor components of higher orders are returned on trailing axes.
    """
    if order not in (0, 1, 2):
        raise InvalidArgument(f"convolution order must be in 0..2, got {order}")
    rho = np.asarray(rho)
    if rho.ndim != spec.d:
        raise InvalidArgument(
            f"density has {rho.ndim} axes but the potential lives in d={spec.d}"
        )
    if x_halfwidth is not None and not math.isclose(
        x_halfwidth, spec.box_halfwidth, rel_tol=1e-12
    ):
        raise InvalidArgument("density grid and potential box differ")
    shape = rho.shape
    if len(set(shape)) != 1:
        raise InvalidArgument("convolution expects equal point counts per axis")
    n = shape[0]
    dx = 2 * spec.box_halfwidth / n
    axes = tuple(range(spec.d))
    kern = _kernel_samples(spec, n, order)
    kern_hat = np.fft.fftn(kern, axes=axes)
    rho_hat = np.fft.fftn(rho, axes=axes)
    if spec.d > 1 and order > 0:
        rho_hat = rho_hat.reshape(shape + (1,) * order)
    out = np.fft.ifftn(kern_hat * rho_hat, axes=axes) * dx**spec.d
    if np.isrealobj(rho):
        out = out.real
    return out
