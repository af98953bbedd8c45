"""Split-step solver and energy functional for the Hamilton Hartree equation

    i d/dt a(x, xi) = (d_x d_xi + W[a](x, xi)) a(x, xi),

where ``W[a] = V * |a|^2`` is the convolution over ``(x, xi)`` with the
interaction symbol ``V(x, xi) = -Gamma'(x) xi``.  Because ``V`` is linear in
``xi`` the convolution splits exactly into

    W[a](x, xi) = xi F(x) + G(x),   F = -Gamma' * rho,   G = Gamma' * J,

with ``rho = int |a|^2 dxi`` and ``J = int xi |a|^2 dxi``.  This avoids a
(non-periodic) convolution along ``xi`` on the truncated grid.

The kinetic operator ``d_x d_xi`` is the multiplier ``k v`` after an FFT in
``x`` and the inverse velocity transform in ``xi``.
"""

import math

import numpy as np
import scipy.fft as sfft

from ..errors import InvalidArgument
from ..phasefield import ComplexField, CoordinateKind, velocity_transform_array
from .common import (KernelConvolver, SolverParams, Trajectory, check_potential_box,
                     normalized_or_rescaled, require_1d, snapshot_indices, time_slices)


class HartreeOperators:
    """Precomputed pieces of the split-step scheme on one xi grid."""

    def __init__(self, grid, spec):
        self.grid = grid
        self.spec = spec
        self.vgrid = grid.dual()
        self.xi = grid.axis(1)
        self.dxi = grid.spacings[1]
        self.kx = grid.frequencies(0)
        self.v = self.vgrid.axis(1)
        self.kv = np.outer(self.kx, self.v)
        self.conv = KernelConvolver(spec, grid.counts[0], 1)

    def to_kv(self, a):
        """Doubly transformed representation: FFT in x, inverse velocity transform in xi."""
        b = velocity_transform_array(a, self.grid, inverse=True)
        return sfft.fft(b, axis=0)

    def from_kv(self, b):
        a = sfft.ifft(b, axis=0)
        return velocity_transform_array(a, self.vgrid)

    def kinetic(self, a, tau):
        return self.from_kv(np.exp(-1j * self.kv * tau) * self.to_kv(a))

    def moments(self, a):
        dens = np.abs(a) ** 2
        rho = dens.sum(axis=1) * self.dxi
        J = dens @ self.xi * self.dxi
        return rho, J

    def mean_field(self, a):
        """``F(x)`` and ``G(x)`` with ``V * |a|^2 = xi F + G``."""
        rho, J = self.moments(a)
        return -self.conv(rho), self.conv(J)

    def potential(self, a):
        F, G = self.mean_field(a)
        return np.outer(F, self.xi) + G[:, None]


def mean_field_potential(alpha_hat: ComplexField, spec) -> np.ndarray:
    """Values of ``(V * |a|^2)(x, xi)`` on the grid of ``alpha_hat``."""
    require_1d(alpha_hat, CoordinateKind.POSITION_XI)
    return HartreeOperators(alpha_hat.grid, spec).potential(alpha_hat.values)


def solve_hamilton_hartree(alpha_hat0: ComplexField, spec, T: float, params: SolverParams,
                           direction: int = 1) -> Trajectory:
    """Strang split-step evolution: kinetic(dt/2), potential(dt), kinetic(dt/2).

    The potential substep multiplies by ``exp(-i dt W[a])``; it leaves ``|a|``
    unchanged, so ``W`` is constant during it.  ``direction = -1`` integrates
    backwards in time.
    """
    require_1d(alpha_hat0, CoordinateKind.POSITION_XI)
    check_potential_box(spec, alpha_hat0)
    if direction not in (1, -1):
        raise InvalidArgument("direction must be +1 or -1")
    a0 = normalized_or_rescaled(alpha_hat0)
    ops = HartreeOperators(a0.grid, spec)
    n, dt = time_slices(T, params.dt)
    h = direction * dt
    half = np.exp(-1j * ops.kv * (h / 2))
    keep = set(snapshot_indices(n, params.snapshot_stride))
    a = np.array(a0.values)
    times, fields = [0.0], [a0]
    for step in range(1, n + 1):
        a = ops.from_kv(half * ops.to_kv(a))
        if not spec.is_zero:
            a = a * np.exp(-1j * h * ops.potential(a))
        a = ops.from_kv(half * ops.to_kv(a))
        if step in keep:
            times.append(direction * step * dt)
            fields.append(ComplexField(a0.grid, a))
    return Trajectory(times, fields, None, {"dt": dt, "steps": n, "solver": "hamilton-hartree"})


def hartree_energy_parts(alpha_hat: ComplexField, spec):
    """Kinetic and interaction contributions to the Hartree energy.

    Returns a dict with ``kinetic = 1/2 <a, d_x d_xi a>`` (complex before
    taking the real part; its imaginary part is reported as ``imag``) and
    ``interaction = 1/4 <a, W[a] a>``.
    """
    require_1d(alpha_hat, CoordinateKind.POSITION_XI)
    ops = HartreeOperators(alpha_hat.grid, spec)
    a = alpha_hat.values
    grid = alpha_hat.grid
    nx = grid.counts[0]
    b = ops.to_kv(a)
    dv = ops.vgrid.spacings[1]
    dx = grid.spacings[0]
    kin = 0.5 * complex(np.vdot(b, ops.kv * b)) * dx * dv / nx
    inter = 0.0
    if not spec.is_zero:
        inter = 0.25 * complex(np.vdot(a, ops.potential(a) * a)) * grid.cell_volume
    total = kin + inter
    return {"kinetic": kin.real, "interaction": complex(inter).real, "imag": total.imag,
            "total": total.real}


def energy_hartree(alpha_hat: ComplexField, spec) -> float:
    """``1/2 <a, (d_x d_xi + 1/2 V * |a|^2) a>`` evaluated on the grid."""
    return hartree_energy_parts(alpha_hat, spec)["total"]
