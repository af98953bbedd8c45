"""Counting functionals for two-particle grid states.

For ``N = 2`` the counting projections reduce to ``P_0 = p1 p2``,
``P_1 = p1 + p2 - 2 p1 p2`` and ``P_2 = 1 - p1 - p2 + p1 p2``, and every
expectation value needs only the partial contractions of the state with
``alpha``.  No operator is materialised, so this works on the full 4D grid.
"""

import numpy as np

from ..errors import InvalidArgument
from ..manybody import PairState
from ..meanfield.hartree import HartreeOperators
from ..phasefield import ComplexField, CoordinateKind
from ..potential import eval_derivatives
from .algebra import CountingWeight, DiscreteState, _check_lambda


def _check_pair(alpha: ComplexField, pair: PairState):
    if alpha.grid.d != 1 or not alpha.grid.same_as(pair.grid):
        raise InvalidArgument("one-particle field and pair state live on different grids")


class _Contractions:
    def __init__(self, alpha, values, vol):
        a = np.conj(alpha)
        self.g1 = np.tensordot(a, values, axes=([0, 1], [0, 1])) * vol  # function of z2
        self.g2 = np.tensordot(values, a, axes=([2, 3], [0, 1])) * vol  # function of z1
        self.c = complex(np.sum(a * self.g1)) * vol


def pair_weighted_inner(alpha: ComplexField, psi: PairState, phi: PairState, eigenvalues):
    """``<psi, sum_k e_k P_k phi>`` for ``k = 0, 1, 2`` with ``P_k`` built on ``alpha``."""
    _check_pair(alpha, psi)
    vol = psi.grid.cell_volume
    a = alpha.values
    cp = _Contractions(a, psi.values, vol)
    cf = cp if phi is psi else _Contractions(a, phi.values, vol)
    p1 = complex(np.vdot(cp.g1, cf.g1)) * vol
    p2 = complex(np.vdot(cp.g2, cf.g2)) * vol
    p12 = np.conj(cp.c) * cf.c
    one = psi.inner(phi)
    e0, e1, e2 = eigenvalues
    P0 = p12
    P1 = p1 + p2 - 2 * p12
    P2 = one - p1 - p2 + p12
    return e0 * P0 + e1 * P1 + e2 * P2


def pair_beta(alpha: ComplexField, pair: PairState, lam) -> float:
    """``<psi, m^alpha psi>`` for a two-particle grid state."""
    _check_lambda(lam)
    eig = CountingWeight.m(2, lam).eigenvalues()
    return float(pair_weighted_inner(alpha, pair, pair, eig).real)


def pair_q1(alpha: ComplexField, pair: PairState) -> float:
    """``<psi, q_1 psi> = 1 - ||p_1 psi||^2``."""
    _check_pair(alpha, pair)
    vol = pair.grid.cell_volume
    c = _Contractions(alpha.values, pair.values, vol)
    return float(pair.norm() ** 2 - np.vdot(c.g1, c.g1).real * vol)


def interaction_deviation(alpha_hat: ComplexField, pair: PairState, spec):
    """``(V(z1 - z2) - Vbar(z1) - Vbar(z2)) psi`` with ``Vbar = V * |alpha|^2``."""
    grid = pair.grid
    x = grid.axis(0)
    xi = grid.axis(1)
    ops = HartreeOperators(alpha_hat.grid, spec)
    vbar = ops.potential(alpha_hat.values)
    dg = eval_derivatives(spec, x[:, None] - x[None, :], 1)[:, None, :, None]
    psi = pair.values
    out = psi * xi[None, :, None, None]
    out -= psi * xi[None, None, None, :]
    out *= -dg
    out -= vbar[:, :, None, None] * psi
    out -= vbar[None, None, :, :] * psi
    return out


def beta_rhs(alpha_hat: ComplexField, pair_state, spec, lam, N: int = 2) -> float:
    """``N Im <psi, m (V(z1 - z2) - Vbar(z1) - Vbar(z2)) psi>``, the time derivative of beta.

    ``pair_state`` is a :class:`PairState` on the xi grid of ``alpha_hat``,
    or a two-particle :class:`DiscreteState` whose amplitudes are the grid
    values times the cell volume.
    """
    _check_lambda(lam)
    if alpha_hat.kind is not CoordinateKind.POSITION_XI:
        raise InvalidArgument("beta_rhs expects a position-xi one-particle field")
    if N != 2:
        raise InvalidArgument("the grid evaluation is exact for N = 2 only")
    if isinstance(pair_state, DiscreteState):
        if pair_state.N != 2 or pair_state.D != alpha_hat.grid.size:
            raise InvalidArgument("discrete state does not match the one-particle grid")
        vals = pair_state.amplitudes.reshape(alpha_hat.grid.shape * 2) / alpha_hat.grid.cell_volume
        pair_state = PairState(alpha_hat.grid, vals, check=False)
    if pair_state.kind is not CoordinateKind.POSITION_XI:
        raise InvalidArgument("pair state must live on a position-xi grid")
    _check_pair(alpha_hat, pair_state)
    res = pair_state.swap_residual()
    if res > 1e-10 * max(1.0, float(np.abs(pair_state.values).max())):
        raise InvalidArgument(f"pair state is not swap symmetric (residual {res:.3g})")
    dev = interaction_deviation(alpha_hat, pair_state, spec)
    phi = PairState(pair_state.grid, dev, check=False)
    eig = CountingWeight.m(2, lam).eigenvalues()
    return float(N * pair_weighted_inner(alpha_hat, pair_state, phi, eig).imag)


def pair_to_discrete(pair: PairState) -> DiscreteState:
    """Grid pair state as an l2-normalised vector in ``(C^D)^(x)2``, ``D`` = grid size."""
    D = pair.grid.size
    return DiscreteState(D, 2, pair.values.reshape(D, D) * pair.grid.cell_volume)


def field_to_vector(field: ComplexField):
    return field.values.ravel() * np.sqrt(field.grid.cell_volume)
