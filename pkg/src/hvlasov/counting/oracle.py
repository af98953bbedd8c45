"""Dense-matrix realisation of the projection calculus.

Built directly from Kronecker products of the one-particle projections, with
no change of basis, so it serves as an independent reference for
:mod:`hvlasov.counting.algebra`.  Intended for ``D**N`` up to a few thousand.
"""

import itertools
from functools import reduce

import numpy as np

from ..errors import InvalidArgument

MAX_DENSE_DIM = 4096


def _check_dim(D, N):
    if D**N > MAX_DENSE_DIM:
        raise InvalidArgument(f"dense matrices limited to dimension {MAX_DENSE_DIM}, got {D ** N}")


def one_particle_projection(alpha):
    alpha = np.asarray(alpha, dtype=complex)
    return np.outer(alpha, alpha.conj())


def kron_slots(ops):
    return reduce(np.kron, ops)


def slot_operator(op, j, N):
    """``op`` acting on particle ``j`` (1-based) of ``N``."""
    D = op.shape[0]
    _check_dim(D, N)
    eye = np.eye(D)
    return kron_slots([op if i == j - 1 else eye for i in range(N)])


def p_matrix(alpha, j, N):
    return slot_operator(one_particle_projection(alpha), j, N)


def q_matrix(alpha, j, N):
    D = len(alpha)
    return np.eye(D**N) - p_matrix(alpha, j, N)


def counting_projection_matrix(alpha, k, N, last=None):
    """Sum over 0/1 patterns of the last ``last`` particles with exactly ``k`` ones of
    ``prod p^(1-a) q^a``."""
    D = len(alpha)
    _check_dim(D, N)
    last = N if last is None else last
    p = one_particle_projection(alpha)
    q = np.eye(D) - p
    eye = np.eye(D)
    out = np.zeros((D**N, D**N), dtype=complex)
    if not 0 <= k <= last:
        return out
    for pattern in itertools.product((0, 1), repeat=last):
        if sum(pattern) != k:
            continue
        ops = [eye] * (N - last) + [q if a else p for a in pattern]
        out += kron_slots(ops)
    return out


def weight_matrix(values, alpha, N, shift=0):
    """``sum_k f(k - shift) P_k`` with ``f`` given on ``0..N`` and zero outside."""
    f = np.asarray(values, dtype=float)
    D = len(alpha)
    out = np.zeros((D**N, D**N), dtype=complex)
    for k in range(N + 1):
        j = k - shift
        if 0 <= j <= N and f[j] != 0:
            out += f[j] * counting_projection_matrix(alpha, k, N)
    return out


def two_body_multiplication(v, N):
    """Diagonal operator ``v(i1, i2)`` on particles 1 and 2 of ``N``."""
    v = np.asarray(v)
    D = v.shape[0]
    _check_dim(D, N)
    diag = np.diag(v.reshape(-1).astype(complex))
    if N == 2:
        return diag
    return np.kron(diag, np.eye(D ** (N - 2)))
