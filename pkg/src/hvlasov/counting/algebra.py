"""Projections and counting operators on ``H^(x)N`` for a finite one-particle space.

Everything here works on amplitude tensors of shape ``(D,) * N``.  The
counting projections ``P_k`` are applied by changing to an orthonormal basis
whose first vector is ``alpha``: in that basis ``P_k`` keeps exactly the
components with ``k`` indices different from zero.
"""

from dataclasses import dataclass
import itertools
import math

import numpy as np

from ..errors import InvalidArgument

_NORM_TOL = 1e-10


@dataclass
class DiscreteState:
    """Vector in ``(C^D)^(x)N`` stored as a tensor of shape ``(D,) * N``."""

    D: int
    N: int
    amplitudes: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        if self.D < 1 or self.N < 1:
            raise InvalidArgument("D and N must be positive")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.size != self.D**self.N:
            raise InvalidArgument(f"expected {self.D ** self.N} amplitudes, got {amps.size}")
        amps = amps.reshape((self.D,) * self.N)
        if not np.all(np.isfinite(amps)):
            raise InvalidArgument("amplitudes must be finite")
        self.amplitudes = amps
        if self.symmetric:
            res = self.symmetry_residual()
            if res > 1e-12 * max(1.0, float(np.abs(amps).max())):
                raise InvalidArgument(f"state claimed symmetric but swap residual is {res:.3g}")

    @property
    def vector(self):
        return self.amplitudes.ravel()

    def norm(self):
        return float(np.linalg.norm(self.vector))

    def normalized(self):
        return DiscreteState(self.D, self.N, self.amplitudes / self.norm(), self.symmetric)

    def inner(self, other):
        return complex(np.vdot(self.vector, other.vector))

    def with_amplitudes(self, amps):
        return DiscreteState(self.D, self.N, amps)

    def symmetry_residual(self):
        a = self.amplitudes
        res = 0.0
        for i in range(self.N - 1):
            res = max(res, float(np.max(np.abs(a - np.swapaxes(a, i, i + 1)))))
        return res

    @classmethod
    def product(cls, alpha, N):
        alpha = np.asarray(alpha, dtype=complex)
        amps = alpha
        for _ in range(N - 1):
            amps = np.multiply.outer(amps, alpha)
        return cls(alpha.size, N, amps, symmetric=True)

    @classmethod
    def random(cls, seed, D, N, symmetric=True):
        """Normalised random state; symmetric ones average over all permutations."""
        rng = np.random.default_rng(seed)
        amps = rng.standard_normal((D,) * N) + 1j * rng.standard_normal((D,) * N)
        if symmetric:
            amps = symmetrize(amps)
        amps = amps / np.linalg.norm(amps)
        return cls(D, N, amps, symmetric=symmetric)


def symmetrize(amps):
    N = amps.ndim
    perms = list(itertools.permutations(range(N)))
    out = np.zeros_like(amps)
    for p in perms:
        out = out + np.transpose(amps, p)
    return out / len(perms)


def random_unit_vector(seed, D):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(D) + 1j * rng.standard_normal(D)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class CountingWeight:
    """Function ``f: {0..N} -> R`` and a shift ``l``.

    The associated operator acts on the range of ``P_k`` by ``f(k - l)`` when
    ``0 <= k - l <= N`` and by zero otherwise; ``l = 0`` is the plain weight.
    """

    values: tuple
    shift: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise InvalidArgument("weight values must be a nonempty 1-d array")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("weight values must be finite")
        object.__setattr__(self, "values", tuple(float(v) for v in vals))
        object.__setattr__(self, "shift", int(self.shift))

    @property
    def N(self):
        return len(self.values) - 1

    def eigenvalues(self):
        """Eigenvalue of the operator on each ``P_k``, ``k = 0..N``."""
        N = self.N
        f = np.asarray(self.values)
        out = np.zeros(N + 1)
        for k in range(N + 1):
            j = k - self.shift
            if 0 <= j <= N:
                out[k] = f[j]
        return out

    def shifted(self, l):
        return CountingWeight(self.values, self.shift + l)

    def map(self, fn):
        return CountingWeight(tuple(fn(np.asarray(self.values))), self.shift)

    @classmethod
    def constant(cls, N, c=1.0):
        return cls(tuple([c] * (N + 1)))

    @classmethod
    def n(cls, N):
        """``n(k) = sqrt(k / N)``."""
        return cls(tuple(math.sqrt(k / N) for k in range(N + 1)))

    @classmethod
    def m(cls, N, lam):
        """``m(k) = min(k / N^lam, 1)``."""
        _check_lambda(lam)
        return cls(tuple(m_value(k, N, lam) for k in range(N + 1)))

    @classmethod
    def delta_m(cls, N, lam, l):
        """``m(k) - m(k - l)`` on ``-|l| <= k <= N^lam + |l|``, zero elsewhere."""
        _check_lambda(lam)
        top = N**lam + abs(l)
        vals = []
        for k in range(N + 1):
            if -abs(l) <= k <= top:
                vals.append(m_value(k, N, lam) - m_value(k - l, N, lam))
            else:
                vals.append(0.0)
        return cls(tuple(vals))


def m_value(k, N, lam):
    """``min(k / N^lam, 1)`` for any integer ``k``."""
    return min(k / N**lam, 1.0)


def _check_lambda(lam):
    if not 0.0 <= lam <= 1.0:
        raise InvalidArgument(f"lambda must lie in [0, 1], got {lam}")


def _check_alpha(alpha, D):
    alpha = np.asarray(alpha, dtype=complex).ravel()
    if alpha.size != D:
        raise InvalidArgument(f"one-particle vector must have length {D}")
    if abs(np.linalg.norm(alpha) - 1.0) > _NORM_TOL:
        raise InvalidArgument("one-particle vector must be normalised")
    return alpha


def adapted_basis(alpha):
    """Unitary matrix whose first column is ``alpha``."""
    alpha = np.asarray(alpha, dtype=complex)
    D = alpha.size
    q, r = np.linalg.qr(np.column_stack([alpha, np.eye(D)]))
    q = q[:, :D]
    q[:, 0] *= r[0, 0] / abs(r[0, 0])
    return q


def _apply_slots(amps, mat, slots):
    for ax in slots:
        amps = np.moveaxis(np.tensordot(mat, amps, axes=(1, ax)), 0, ax)
    return amps


def excitation_counts(D, N, last=None):
    """Tensor of the number of slots (among the last ``last``) not in the first basis vector."""
    last = N if last is None else last
    ind = (np.arange(D) != 0).astype(int)
    counts = np.zeros((1,) * N, dtype=int)
    for ax in range(N - last, N):
        shape = [1] * N
        shape[ax] = D
        counts = counts + ind.reshape(shape)
    return np.broadcast_to(counts, (D,) * N)


def _spectral_apply(alpha, state: DiscreteState, eig_of_count, last=None):
    U = adapted_basis(alpha)
    slots = range(state.N)
    c = _apply_slots(state.amplitudes, U.conj().T, slots)
    counts = excitation_counts(state.D, state.N, last)
    c = c * eig_of_count[counts]
    return _apply_slots(c, U, slots)


def apply_projection(kind, alpha, state: DiscreteState, j=None, k=None, last=None) -> DiscreteState:
    """Apply ``p_j``, ``q_j`` (``kind`` ``"p"``/``"q"``, 1-based ``j``) or ``P_k``.

    For ``kind == "P"`` the optional ``last`` restricts the count to the last
    ``last`` particles (``P_k`` of the last ``last`` factors); ``k`` outside
    ``0..last`` gives the zero operator.
    """
    alpha = _check_alpha(alpha, state.D)
    N = state.N
    if kind in ("p", "q"):
        if j is None or not 1 <= j <= N:
            raise InvalidArgument(f"particle index must lie in 1..{N}")
        ax = j - 1
        c = np.tensordot(alpha.conj(), state.amplitudes, axes=(0, ax))
        p = np.moveaxis(np.multiply.outer(alpha, c), 0, ax)
        return state.with_amplitudes(p if kind == "p" else state.amplitudes - p)
    if kind == "P":
        last = N if last is None else last
        if not 0 <= last <= N:
            raise InvalidArgument(f"last must lie in 0..{N}")
        if k is None:
            raise InvalidArgument("P needs a count k")
        eig = np.zeros(N + 1)
        if 0 <= k <= last:
            eig[k] = 1.0
        return state.with_amplitudes(_spectral_apply(alpha, state, eig, last))
    raise InvalidArgument(f"unknown projection kind {kind!r}")


def apply_weight(weight: CountingWeight, alpha, state: DiscreteState) -> DiscreteState:
    """Apply ``sum_k f(k - l) P_k`` (see :class:`CountingWeight`)."""
    alpha = _check_alpha(alpha, state.D)
    if weight.N != state.N:
        raise InvalidArgument(f"weight is defined for N={weight.N}, state has N={state.N}")
    return state.with_amplitudes(_spectral_apply(alpha, state, weight.eigenvalues()))


def count_distribution(alpha, state: DiscreteState):
    """``<state, P_k state>`` for ``k = 0..N``."""
    alpha = _check_alpha(alpha, state.D)
    U = adapted_basis(alpha)
    c = _apply_slots(state.amplitudes, U.conj().T, range(state.N))
    counts = excitation_counts(state.D, state.N)
    return np.bincount(counts.ravel(), weights=np.abs(c.ravel()) ** 2, minlength=state.N + 1)


def beta_exact(alpha, state: DiscreteState, lam) -> float:
    """``<state, m^alpha state>`` with ``m(k) = min(k / N^lam, 1)``.

    The state must be normalised.
    """
    _check_lambda(lam)
    if abs(state.norm() - 1.0) > _NORM_TOL:
        raise InvalidArgument("state must be normalised")
    dist = count_distribution(alpha, state)
    m = np.asarray(CountingWeight.m(state.N, lam).values)
    return float(np.dot(dist, m))
