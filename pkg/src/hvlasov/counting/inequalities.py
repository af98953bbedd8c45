"""Audits of the large-xi cutoff bound and the projected operator-norm bounds."""

from dataclasses import dataclass
import math

import numpy as np

from ..errors import InvalidArgument
from ..manybody import PairState, random_pair_state
from ..meanfield.hartree import HartreeOperators
from ..phasefield import ComplexField, CoordinateKind, sobolev_norm, velocity_fourier
from ..potential import eval_derivatives, potential_constant


def smoothstep7(u):
    """``35u^4 - 84u^5 + 70u^6 - 20u^7`` clipped to ``[0, 1]``; C^3 at both ends."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    return u**4 * (35 - 84 * u + 70 * u**2 - 20 * u**3)


@dataclass(frozen=True)
class CutoffSpec:
    """Radial cutoff ``chi_R(xi) = chi(|xi| / R)``, 1 on ``|xi| <= R`` and 0 on ``|xi| >= 2R``."""

    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise InvalidArgument("cutoff radius must be positive")

    def profile(self, r):
        """``chi`` as a function of the scaled radius."""
        return 1.0 - smoothstep7(np.asarray(r, dtype=float) - 1.0)

    def __call__(self, xi):
        return self.profile(np.abs(np.asarray(xi, dtype=float)) / self.R)


def _as_xi(field: ComplexField):
    if field.kind is CoordinateKind.POSITION_VELOCITY:
        return velocity_fourier(field)
    return field


def _k(grid, axis, ndim):
    shape = [1] * ndim
    shape[axis] = -1
    return grid.frequencies(axis % 2).reshape(shape)


def _xi(grid, axis, ndim):
    shape = [1] * ndim
    shape[axis] = -1
    return grid.axis(axis % 2).reshape(shape)


def second_derivative_norm(values, grid, x_axis=0, p_axis=1):
    """``||D^2_z a||`` (Frobenius, d = 1) of the particle on ``(x_axis, p_axis)``, from xi data.

    In the xi picture ``d_v`` becomes multiplication by ``i xi``, so the
    Hessian entries are ``d_xx``, ``i xi d_x`` (twice) and ``-xi^2``.
    """
    nd = values.ndim
    vol = grid.cell_volume ** (nd // 2)
    k = _k(grid, x_axis, nd)
    xi = _xi(grid, p_axis, nd)
    c = np.fft.fft(values, axis=x_axis)
    n = values.shape[x_axis]
    # Parseval along x: sum |f|^2 = sum |F|^2 / n
    t_xx = float(np.sum(np.abs(k**2 * c) ** 2)) / n
    t_xv = float(np.sum(np.abs(k * xi * c) ** 2)) / n
    t_vv = float(np.sum(np.abs(xi**2 * values) ** 2))
    return math.sqrt((t_xx + 2 * t_xv + t_vv) * vol)


def cutoff_residual(field, cutoff: CutoffSpec, second_deriv_norm=None):
    """Both sides of ``||(1 - chi_R(xi_1)) xi_1 a|| <= ||D^2_{z1} a|| / R``.

    ``field`` is a one-particle :class:`ComplexField` or a :class:`PairState`
    (the cutoff then acts on particle 1).  The second-derivative norm is
    computed spectrally unless supplied.
    """
    if isinstance(field, PairState):
        st = field.to_xi()
        vals, grid = st.values, st.grid
        vol = grid.cell_volume**2
    else:
        f = _as_xi(field)
        if f.grid.d != 1:
            raise InvalidArgument("cutoff_residual is implemented for d = 1")
        vals, grid = f.values, f.grid
        vol = grid.cell_volume
    xi = _xi(grid, 1, vals.ndim)
    tail = (1.0 - cutoff(xi)) * xi * vals
    lhs = math.sqrt(float(np.sum(np.abs(tail) ** 2)) * vol)
    if second_deriv_norm is None:
        second_deriv_norm = second_derivative_norm(vals, grid)
    rhs = float(second_deriv_norm) / cutoff.R
    return {"lhs": lhs, "rhs": rhs}


def _interaction_pair(spec, grid):
    """``V(z1 - z2) = -Gamma'(x1 - x2)(xi1 - xi2)`` on the 4D xi grid."""
    x = grid.axis(0)
    xi = grid.axis(1)
    dg = eval_derivatives(spec, x[:, None] - x[None, :], 1)[:, None, :, None]
    return -dg * (xi[None, :, None, None] - xi[None, None, None, :])


def opnorm_residuals(alpha_hat: ComplexField, spec, trials: int = 50, seed: int = 0, states=None,
                     c_gamma=None):
    """``rhs - lhs`` of the three projected operator bounds on random pair states.

    For each test state ``phi``::

        ||V(z1 - z2) p1 p2 phi|| <= C ||a||_{M1}^2 ||phi||
        ||Vbar(z1) p1 phi||      <= C ||a||_{M1}^2 ||phi||
        ||xi_1 p1 phi||          <= ||xi a|| ||phi||

    Test states are seeded random symmetric pair states (seed ``seed + i``)
    unless ``states`` is given.  Returns a dict of residual arrays keyed by
    ``interaction_pp``, ``mean_field_p`` and ``momentum_p``.
    """
    a = _as_xi(alpha_hat)
    if a.grid.d != 1:
        raise InvalidArgument("opnorm_residuals is implemented for d = 1")
    norm = a.norm()
    if abs(norm - 1) > 1e-10:
        raise InvalidArgument("alpha_hat must be normalised")
    grid = a.grid
    vol = grid.cell_volume
    C = potential_constant(spec) if c_gamma is None else float(c_gamma)
    m1 = sobolev_norm(a, 1)
    xi = grid.axis(1)[None, :]
    xi_norm = math.sqrt(float(np.sum(np.abs(xi * a.values) ** 2)) * vol)

    prod = np.multiply.outer(a.values, a.values)
    v_pp = math.sqrt(float(np.sum(np.abs(_interaction_pair(spec, grid) * prod) ** 2)) * vol * vol)
    vbar = HartreeOperators(grid, spec).potential(a.values)
    xi4 = grid.axis(1)[None, :, None, None]

    if states is None:
        states = (random_pair_state(seed + i, grid) for i in range(trials))
    out = {"interaction_pp": [], "mean_field_p": [], "momentum_p": []}
    conj = np.conj(a.values)
    for phi in states:
        if isinstance(phi, ComplexField):
            raise InvalidArgument("test states must be pair states")
        phi = phi.to_xi()
        pn = phi.norm()
        c12 = complex(np.tensordot(np.tensordot(conj, phi.values, axes=([0, 1], [0, 1])),
                                   conj, axes=([0, 1], [0, 1]))) * vol * vol
        g1 = np.tensordot(conj, phi.values, axes=([0, 1], [0, 1])) * vol
        p1phi = np.multiply.outer(a.values, g1)
        lhs_v = math.sqrt(float(np.sum(np.abs(vbar[:, :, None, None] * p1phi) ** 2)) * vol * vol)
        lhs_xi = math.sqrt(float(np.sum(np.abs(xi4 * p1phi) ** 2)) * vol * vol)
        out["interaction_pp"].append(C * m1 * m1 * pn - abs(c12) * v_pp)
        out["mean_field_p"].append(C * m1 * m1 * pn - lhs_v)
        out["momentum_p"].append(xi_norm * pn - lhs_xi)
    return {k: np.array(v) for k, v in out.items()}
