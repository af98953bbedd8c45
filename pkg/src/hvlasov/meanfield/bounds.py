"""Closed-form Gronwall envelopes for mean-field and N-body solutions.

All functions take ``t >= 0`` and are vectorised over ``t``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate

from ..errors import InvalidArgument


def mfc_constants(c_gamma: float, d: int = 1):
    """Constants ``(C1, C2, C3)`` of the mean-field consistency inequalities.

    ``C1 = sqrt(d (1 + 4 C^2))``.  Evaluating the Hessian and gradient brackets
    of the two-body Hamiltonian in the same way gives ``C2 = 4 d^{3/2} C`` and
    ``C3 = 2 sqrt(2) d sqrt(1 + 4 d^2 C^2)``.
    """
    C = float(c_gamma)
    c1 = math.sqrt(d * (1 + 4 * C * C))
    c2 = 4 * d**1.5 * C
    c3 = 2 * math.sqrt(2) * d * math.sqrt(1 + 4 * d * d * C * C)
    return c1, c2, c3


@dataclass(frozen=True)
class BoundParams:
    M: float
    C_gamma: float
    C1: float = 0.0
    C2: float = 0.0
    C3: float = 0.0
    d: int = 1

    def __post_init__(self):
        for name in ("M", "C_gamma", "C1", "C2", "C3"):
            if getattr(self, name) < 0:
                raise InvalidArgument(f"{name} must be nonnegative")

    @classmethod
    def for_potential(cls, M, c_gamma, d=1):
        return cls(M, c_gamma, *mfc_constants(c_gamma, d), d=d)


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidArgument("bounds are defined for t >= 0")
    return t


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def q_m(M, C, t):
    """``M (1 + C M^2 + C M^2 exp((1 + 2 C M^2) t)) / (1 + 2 C M^2)``."""
    t = _check_t(t)
    cm = C * M * M
    return _scalar(M * (1 + cm + cm * np.exp((1 + 2 * cm) * t)) / (1 + 2 * cm))


def _q_parts(M, C):
    # Q(t) = a + b exp(g t)
    cm = C * M * M
    return M * (1 + cm) / (1 + 2 * cm), M * cm / (1 + 2 * cm), 1 + 2 * cm


def lipschitz_factor(M, C, t):
    """``exp(int_0^t (1 + 4 C^2 M^2 Q_M(s)^2) ds)`` in closed form."""
    t = _check_t(t)
    a, b, g = _q_parts(M, C)
    int_q2 = a * a * t + 2 * a * b * np.expm1(g * t) / g + b * b * np.expm1(2 * g * t) / (2 * g)
    with np.errstate(over="ignore"):
        # the factor exceeds the double range quickly; it then reads as inf
        return _scalar(np.exp(t + 4 * C * C * M * M * int_q2))


def b1_nbody(M, C1, t):
    """``M exp((1 + C1^2) t / 2)``."""
    t = _check_t(t)
    return _scalar(M * np.exp(0.5 * (1 + C1 * C1) * t))


def b2_nbody(M, C1, C2, C3, t):
    """``M (1 + C2^2/(1+C1^2) (exp((1+C1^2) t) - 1))^{1/2} exp((3/2 + C3^2) t)``."""
    t = _check_t(t)
    g = 1 + C1 * C1
    return _scalar(M * np.sqrt(1 + C2 * C2 / g * np.expm1(g * t)) * np.exp((1.5 + C3 * C3) * t))


def theoretical_bounds(bp: BoundParams, t):
    """Evaluate ``q_m``, ``b1_nbody``, ``b2_nbody`` and ``lipschitz_factor`` at ``t``."""
    t = _check_t(t)
    return {
        "q_m": q_m(bp.M, bp.C_gamma, t),
        "b1_nbody": b1_nbody(bp.M, bp.C1, t),
        "b2_nbody": b2_nbody(bp.M, bp.C1, bp.C2, bp.C3, t),
        "lipschitz_factor": lipschitz_factor(bp.M, bp.C_gamma, t),
    }


def flow_derivative_bound(C, m0, t):
    """``exp((1 + C m0^2) t)``: bound on the first derivative of the characteristic flow."""
    t = _check_t(t)
    return _scalar(np.exp((1 + C * m0 * m0) * t))


def flow_second_derivative_bound(C, m0, t):
    """``exp(2 (1 + C m0^2) t) / 2``: bound on the second derivative of the flow."""
    t = _check_t(t)
    return _scalar(0.5 * np.exp(2 * (1 + C * m0 * m0) * t))


SECOND_DERIVATIVE_BOUND_FORMULA = (
    "B(t) = M*D1(t)^2 + sqrt(2d)*M*D2(t) "
    "+ 2 sqrt(2d) M D1(t) int_0^t C M Q(s) D1(t-s) ds "
    "+ M int_0^t C M Q(s) D1(t-s)^2 ds + M int_0^t C M Q(s) D2(t-s) ds, "
    "D1(s)=exp((1+C M^2) s), D2(s)=exp(2(1+C M^2) s)/2, Q=Q_M"
)


def second_derivative_bound(bp: BoundParams, t):
    """Bound on ``||D^2 a(t)||_2`` for data with ``W^{2,2}`` norm at most ``M``.

    Composed from the first- and second-derivative flow bounds, the ``W^{1,2}``
    envelope ``Q_M`` (which bounds ``||grad K||`` and ``||grad^2 K||`` by
    ``C M Q_M``) and the five-term estimate of the second derivative of the
    transport formula; see :data:`SECOND_DERIVATIVE_BOUND_FORMULA`.  The
    ``L^2`` norm of the initial datum is bounded by ``M`` as well.
    """
    M, C, d = bp.M, bp.C_gamma, bp.d
    ts = np.atleast_1d(_check_t(t))
    c = 1 + C * M * M
    s2d = math.sqrt(2 * d)

    def one(tt):
        d1 = math.exp(c * tt)
        d2 = 0.5 * math.exp(2 * c * tt)
        kq = lambda s: C * M * q_m(M, C, s)  # noqa: E731
        i1 = integrate.quad(lambda s: kq(s) * math.exp(c * (tt - s)), 0, tt)[0] if tt > 0 else 0.0
        i2 = integrate.quad(lambda s: kq(s) * math.exp(2 * c * (tt - s)), 0, tt)[0] if tt > 0 else 0.0
        return (M * d1 * d1 + s2d * M * d2 + 2 * s2d * M * d1 * i1 + M * i2 + 0.5 * M * i2)

    out = np.array([one(float(tt)) for tt in ts])
    return float(out[0]) if np.ndim(t) == 0 else out
