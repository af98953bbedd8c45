"""Explicit Gronwall envelope for the weighted mean-field error ``beta_N(t)``.

The derivative of ``beta`` splits into three pieces, each bounded by
quantities that are already available in closed form: the ``W^{1,2}``
envelope ``Q`` of the mean-field solution, the second-derivative bound of
the N-particle solution and the second-derivative bound of the mean-field
solution.  With the cutoff radius ``R = N^delta``, ``delta = (1 - lam)/4``::

    |beta'| <= a(t) beta + b(t)
    a(t) = 2 C sqrt((1 + N^-lam)/(1 - 1/N)) (2 Q^2 + 2 N^((lam-1)/2) (R + Q^2))
    b(t) = 2 C sqrt(1/(1 - 1/N)) (Q^2 N^-lam + (B2N(t) + B2(t)) / R)

and therefore ``beta(t) <= (beta(0) + int_0^t b) exp(int_0^t a)``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate

from ..errors import InvalidArgument
from ..meanfield.bounds import BoundParams, b2_nbody, q_m, second_derivative_bound
from ..phasefield import (ComplexField, CoordinateKind, gradient, inverse_velocity_fourier,
                          sobolev_norm)
from ..potential import potential_constant

ENVELOPE_FORMULA = (
    "beta(t) <= (beta(0) + int_0^t b) * exp(int_0^t a), R = N^((1-lam)/4), "
    "a = 2C sqrt((1+N^-lam)/(1-1/N)) (2Q^2 + 2N^((lam-1)/2)(R+Q^2)), "
    "b = 2C sqrt(1/(1-1/N)) (Q^2 N^-lam + (B2N + B2)/R), "
    "Q = Q_M, B2N = b2_nbody(M, C1, C2, C3), B2 = second_derivative_bound(M, C)"
)


def product_datum_constant(field: ComplexField) -> float:
    """Smallest admissible ``M`` for the product datum built on ``field``.

    ``M`` must dominate 1, ``||grad_{z1} a0^(x)N|| = ||grad a0||``,
    ``||D^2_{(z1,z2)} a0^(x)N|| = sqrt(2 ||D^2 a0||^2 + 2 ||grad a0||^4)`` and
    the ``W^{2,2}`` norm of ``a0`` (all for a normalised ``a0``).
    """
    if field.kind is CoordinateKind.POSITION_XI:
        field = inverse_velocity_fourier(field)
    f = field.normalized()
    grads = gradient(f)
    vol = f.grid.cell_volume
    g2 = sum(float(np.sum(np.abs(g) ** 2)) * vol for g in grads)
    w1 = sobolev_norm(f, 1)
    w2 = sobolev_norm(f, 2)
    # ||D^2||^2 = ||.||_{W22}^2 - ||.||_{W12}^2 with the Frobenius convention
    h2 = max(w2 * w2 - w1 * w1, 0.0)
    pair_hessian = math.sqrt(2 * h2 + 2 * g2 * g2)
    return max(1.0, math.sqrt(g2), pair_hessian, w2)


@dataclass
class ErrorEnvelope:
    """Envelope of ``beta_N`` for a product datum, evaluated from computed constants."""

    N: int
    lam: float
    M: float
    C_gamma: float
    beta0: float = 0.0
    d: int = 1
    formula: str = field(default=ENVELOPE_FORMULA, init=False)

    def __post_init__(self):
        if self.N < 2:
            raise InvalidArgument("N must be at least 2")
        if not 0.0 <= self.lam < 1.0:
            raise InvalidArgument("lambda must lie in [0, 1)")
        if self.M < 1:
            raise InvalidArgument("M must be at least 1")
        self.bp = BoundParams.for_potential(self.M, self.C_gamma, self.d)

    @property
    def R(self):
        return self.N ** ((1 - self.lam) / 4)

    def rates(self, t):
        """``(a(t), b(t))`` of the differential inequality."""
        N, lam, C, R = self.N, self.lam, self.C_gamma, self.R
        Q2 = q_m(self.M, C, t) ** 2
        bp = self.bp
        a = 2 * C * math.sqrt((1 + N**-lam) / (1 - 1 / N)) * (
            2 * Q2 + 2 * N ** ((lam - 1) / 2) * (R + Q2))
        hess = b2_nbody(bp.M, bp.C1, bp.C2, bp.C3, t) + second_derivative_bound(bp, t)
        b = 2 * C * math.sqrt(1 / (1 - 1 / N)) * (Q2 * N**-lam + hess / R)
        return a, b

    def log_value(self, t: float) -> float:
        """Natural log of the envelope (it overflows a double for modest ``t``)."""
        if t < 0:
            raise InvalidArgument("t must be nonnegative")
        if t == 0:
            return math.log(self.beta0) if self.beta0 > 0 else -math.inf
        ia = integrate.quad(lambda s: self.rates(s)[0], 0.0, t)[0]
        ib = integrate.quad(lambda s: self.rates(s)[1], 0.0, t)[0]
        return math.log(self.beta0 + ib) + ia

    def __call__(self, t: float) -> float:
        """Envelope value; ``inf`` when it exceeds the double range."""
        lv = self.log_value(t)
        return math.exp(lv) if lv < 700 else math.inf


def error_envelope(alpha0: ComplexField, spec, N: int, lam: float, t: float, beta0: float = 0.0):
    """Envelope value at ``t`` together with the constants that enter it."""
    C = potential_constant(spec)
    M = product_datum_constant(alpha0)
    env = ErrorEnvelope(N, lam, M, C, beta0, d=spec.d)
    return {"envelope": env(t), "log_envelope": env.log_value(t), "M": M, "C_gamma": C,
            "R": env.R, "formula": env.formula}
