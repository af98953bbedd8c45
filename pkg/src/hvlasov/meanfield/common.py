"""Shared solver parameters, trajectories and field helpers for the mean-field solvers."""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
import scipy.fft as sfft

from ..errors import InvalidArgument
from ..phasefield import ComplexField, CoordinateKind
from ..potential import PotentialSpec, _kernel_samples


@dataclass(frozen=True)
class SolverParams:
    dt: float = 5e-3
    picard_tol: float = 1e-10
    picard_max_iter: int = 40
    snapshot_stride: int = 1
    # length of the sub-intervals on which the fixed-point iteration is run;
    # None runs it on the whole interval at once
    picard_window: float = None

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidArgument("dt must be positive")
        if not self.picard_tol > 0:
            raise InvalidArgument("picard_tol must be positive")
        if self.picard_max_iter < 1:
            raise InvalidArgument("picard_max_iter must be at least 1")
        if self.snapshot_stride < 1:
            raise InvalidArgument("snapshot_stride must be at least 1")
        if self.picard_window is not None and not self.picard_window > 0:
            raise InvalidArgument("picard_window must be positive")


@dataclass
class Trajectory:
    """Snapshots of a mean-field run together with its self-consistent fields."""

    times: list
    fields: list
    history: object = None
    info: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.fields[-1]

    def at(self, t, tol=1e-9):
        """Snapshot stored at time ``t``."""
        for s, f in zip(self.times, self.fields):
            if abs(s - t) <= tol * max(1.0, abs(t)):
                return f
        raise KeyError(f"no snapshot at t={t}")


def time_slices(T, dt):
    """Uniform slice count and step so that the slices end exactly at ``T``."""
    if T < 0:
        raise InvalidArgument("final time must be nonnegative")
    if T == 0:
        return 0, dt
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        n = int(math.ceil(T / dt))
    return n, T / n


def snapshot_indices(n, stride):
    idx = list(range(0, n + 1, stride))
    if idx[-1] != n:
        idx.append(n)
    return idx


def normalized_or_rescaled(field: ComplexField, what="initial datum"):
    norm = field.norm()
    if norm == 0:
        raise InvalidArgument(f"{what} is zero")
    if abs(norm - 1.0) > 1e-12:
        warnings.warn(f"{what} has norm {norm:.6g}; rescaling to 1", stacklevel=3)
        return field.normalized()
    return field


def require_1d(field: ComplexField, kind: CoordinateKind):
    if field.grid.d != 1:
        raise InvalidArgument("mean-field solvers are implemented for d = 1")
    if field.kind is not kind:
        raise InvalidArgument(f"expected a {kind.value} field")


def check_potential_box(spec: PotentialSpec, field: ComplexField):
    same_box = math.isclose(spec.box_halfwidth, field.grid.x_halfwidth, rel_tol=1e-12)
    if spec.d != field.grid.d or not same_box:
        raise InvalidArgument("potential box does not match the field grid")


class KernelConvolver:
    """Batched periodic convolutions with a fixed potential derivative (d = 1)."""

    def __init__(self, spec: PotentialSpec, nx: int, order: int):
        self.dx = 2 * spec.box_halfwidth / nx
        self.hat = sfft.fft(_kernel_samples(spec, nx, order))

    def __call__(self, rho):
        out = sfft.ifft(sfft.fft(rho, axis=-1) * self.hat, axis=-1) * self.dx
        return out.real if np.isrealobj(rho) else out


def velocity_moments(values, grid):
    """Density ``rho(x)`` and ``Im int conj(alpha) d_v alpha dv`` for velocity fields.

    ``values`` may carry leading batch axes before the ``(x, v)`` axes.
    """
    dv = grid.spacings[1]
    rho = np.sum(np.abs(values) ** 2, axis=-1) * dv
    k = grid.frequencies(1)
    dva = sfft.ifft(1j * k * sfft.fft(values, axis=-1), axis=-1)
    w = np.sum(np.conj(values) * dva, axis=-1) * dv
    return rho, w.imag
