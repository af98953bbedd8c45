"""Residuals of the algebraic identities of the counting calculus, as dense matrices.

Each check returns the largest residual found, measured both as the
Frobenius norm of the operator difference and as the norm of the difference
applied to a random symmetric state.  Inequalities contribute their
violation ``max(0, lhs - rhs)``.
"""

import numpy as np

from .algebra import CountingWeight, DiscreteState, random_unit_vector
from .oracle import (counting_projection_matrix, p_matrix, q_matrix, two_body_multiplication,
                     weight_matrix)

CHECKS = (
    "weights_commute",
    "weight_commutes_with_p",
    "weight_commutes_with_P",
    "mean_q_equals_n_squared",
    "q1_norm_equals_n_norm",
    "q1q2_bound",
    "weight_through_two_body_operator",
    "m_three_term_decomposition",
)


def _res(op, psi):
    return max(float(np.linalg.norm(op)), float(np.linalg.norm(op @ psi)))


def identity_residuals(seed: int, D: int = 3, N: int = 4, lambdas=(0.0, 0.5, 1.0)):
    """All identity residuals for one seeded draw of ``alpha``, state, weights and ``v``."""
    rng = np.random.default_rng(seed)
    alpha = random_unit_vector(rng.integers(2**32), D)
    psi = DiscreteState.random(int(rng.integers(2**32)), D, N, symmetric=True).vector
    f = rng.uniform(0.0, 1.0, N + 1)
    g = rng.uniform(0.0, 1.0, N + 1)
    v = rng.standard_normal((D, D))
    dim = D**N
    eye = np.eye(dim)

    F = weight_matrix(f, alpha, N)
    G = weight_matrix(g, alpha, N)
    p = [p_matrix(alpha, j, N) for j in range(1, N + 1)]
    q = [eye - pj for pj in p]
    out = {}

    out["weights_commute"] = _res(F @ G - G @ F, psi)
    out["weight_commutes_with_p"] = max(_res(F @ pj - pj @ F, psi) for pj in p)
    r = 0.0
    for last in range(1, N + 1):
        for k in range(last + 1):
            P = counting_projection_matrix(alpha, k, N, last)
            r = max(r, _res(F @ P - P @ F, psi))
    out["weight_commutes_with_P"] = r

    n_vals = np.asarray(CountingWeight.n(N).values)
    n_op = weight_matrix(n_vals, alpha, N)
    n2_op = weight_matrix(n_vals**2, alpha, N)
    out["mean_q_equals_n_squared"] = _res(sum(q) / N - n2_op, psi)

    lhs = np.linalg.norm(F @ q[0] @ psi)
    rhs = np.linalg.norm(F @ n_op @ psi)
    out["q1_norm_equals_n_norm"] = float(abs(lhs - rhs))
    lhs2 = np.linalg.norm(F @ q[0] @ q[1] @ psi)
    rhs2 = np.sqrt(N / (N - 1)) * np.linalg.norm(F @ n2_op @ psi)
    out["q1q2_bound"] = float(max(0.0, lhs2 - rhs2))

    V = two_body_multiplication(v, N)
    Q = [p[0] @ p[1], p[0] @ q[1], q[0] @ q[1]]
    r = 0.0
    for j in range(3):
        for k in range(3):
            Fs = weight_matrix(f, alpha, N, shift=k - j)
            r = max(r, _res(F @ Q[j] @ V @ Q[k] - Q[j] @ V @ Q[k] @ Fs, psi))
    out["weight_through_two_body_operator"] = r

    r = 0.0
    for lam in lambdas:
        r = max(r, m_decomposition_residual(alpha, N, lam, psi, p, q))
    out["m_three_term_decomposition"] = r
    return out


def m_decomposition_residual(alpha, N, lam, psi=None, p=None, q=None):
    """Residual of ``m = (D_-2 m) p1 p2 + (D_-1 m)(p1 q2 + q1 p2) + sum_k m(k) P^(N-2)_(k-2)``."""
    D = len(alpha)
    if p is None:
        p = [p_matrix(alpha, j, N) for j in (1, 2)]
        q = [q_matrix(alpha, j, N) for j in (1, 2)]
    m = CountingWeight.m(N, lam)
    M = weight_matrix(m.values, alpha, N)
    d2 = weight_matrix(CountingWeight.delta_m(N, lam, -2).values, alpha, N)
    d1 = weight_matrix(CountingWeight.delta_m(N, lam, -1).values, alpha, N)
    rest = np.zeros_like(M)
    for k in range(N + 1):
        rest += m.values[k] * counting_projection_matrix(alpha, k - 2, N, last=N - 2)
    decomposition = d2 @ p[0] @ p[1] + d1 @ (p[0] @ q[1] + q[0] @ p[1]) + rest
    diff = M - decomposition
    if psi is None:
        psi = DiscreteState.random(0, D, N).vector
    return _res(diff, psi)


def identity_suite(seeds=range(100), D=3, N=4, lambdas=(0.0, 0.5, 1.0)):
    """Maximum of every residual over ``seeds``; returns ``{check: max residual}``."""
    worst = {name: 0.0 for name in CHECKS}
    for s in seeds:
        res = identity_residuals(int(s), D, N, lambdas)
        for name, val in res.items():
            worst[name] = max(worst[name], val)
    return worst


def surrogate_gap(alpha, state: DiscreteState, lam):
    """``<m> - <n^2>``; nonnegative because ``n(k)^2 <= m(k)``."""
    from .algebra import count_distribution

    dist = count_distribution(alpha, state)
    N = state.N
    n2 = np.arange(N + 1) / N
    m = np.asarray(CountingWeight.m(N, lam).values)
    return float(np.dot(dist, m - n2))
