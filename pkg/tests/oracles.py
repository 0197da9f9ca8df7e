"""Brute-force reference computations used as test oracles.

Nothing here calls into the convolution algebra: everything is computed by
enumerating jump sequences of the Markov renewal chain directly from the
kernel entries.
"""

import itertools

import numpy as np


def _moves(q, i):
    """Nonzero ``(j, k, p)`` transitions out of state ``i``."""
    L, n, _ = q.shape
    return [(j, k, q[k, i, j]) for j in range(n) for k in range(1, L) if q[k, i, j] > 0]


def _tail(q, i, t):
    """``P_i(X_1 > t)`` summed entry by entry."""
    L, n, _ = q.shape
    return sum(q[k, i, j] for j in range(n) for k in range(t + 1, L))


def path_nfold(q, n_jumps, K):
    """``P_i(J_n = j, S_n = k)`` for ``k <= K`` by enumerating all n-jump paths."""
    n = q.shape[1]
    out = np.zeros((K + 1, n, n))
    for i in range(n):
        stack = [(i, 0, 1.0, 0)]
        while stack:
            s, t, p, depth = stack.pop()
            if depth == n_jumps:
                out[t, i, s] += p
                continue
            for j, k, pk in _moves(q, s):
                if t + k <= K:
                    stack.append((j, t + k, p * pk, depth + 1))
    return out


def _tails(q, K):
    """``tails[s, t] = P_s(X_1 > t)`` for ``t <= K``, via :func:`_tail`."""
    n = q.shape[1]
    return np.array([[_tail(q, s, t) for t in range(K + 1)] for s in range(n)])


def path_distribution(q, K):
    """``P_i(Z_k = j)`` for ``k <= K``: every path with ``S_n <= K`` contributes its
    probability times ``P(X_{n+1} > k - S_n)`` to ``(i, J_n, k)`` for ``k >= S_n``."""
    n = q.shape[1]
    tails = _tails(q, K)
    moves = [_moves(q, s) for s in range(n)]
    P = np.zeros((K + 1, n, n))
    for i in range(n):
        stack = [(i, 0, 1.0)]
        while stack:
            s, t, p = stack.pop()
            P[t:, i, s] += p * tails[s, : K + 1 - t]
            for j, x, px in moves[s]:
                if t + x <= K:
                    stack.append((j, t + x, p * px))
    return P


def path_reliability(q, up, K):
    """``P_i(T_D > k)`` for ``i`` in ``up``: same enumeration, pruned when a path enters D."""
    up = list(up)
    tails = _tails(q, K)
    moves = [[m for m in _moves(q, s) if m[0] in up] for s in range(q.shape[1])]
    R = np.zeros((K + 1, len(up)))
    for a, i in enumerate(up):
        stack = [(i, 0, 1.0)]
        while stack:
            s, t, p = stack.pop()
            R[t:, a] += p * tails[s, : K + 1 - t]
            for j, x, px in moves[s]:
                if t + x <= K:
                    stack.append((j, t + x, p * px))
    return R


def mean_return_time(q, i, max_jumps=60, tol=1e-13):
    """``E_i S_{tau_i}`` by enumerating first-return paths (for small, quickly mixing kernels)."""
    total, mass = 0.0, 0.0
    frontier = {(i, 0): 1.0}
    for _ in range(max_jumps):
        nxt = {}
        for (s, t), p in frontier.items():
            for j, k, pk in _moves(q, s):
                if j == i:
                    total += p * pk * (t + k)
                    mass += p * pk
                else:
                    nxt[j, t + k] = nxt.get((j, t + k), 0.0) + p * pk
        frontier = nxt
        if 1.0 - mass < tol:
            break
    return total, mass


def brute_convolve(A, B, K):
    """Triple-loop matrix convolution."""
    n, m = A.shape[1], B.shape[2]
    out = np.zeros((K + 1, n, m))
    for k, i, j in itertools.product(range(K + 1), range(n), range(m)):
        s = 0.0
        for l in range(k + 1):
            if l < A.shape[0] and k - l < B.shape[0]:
                for u in range(A.shape[2]):
                    s += A[l, i, u] * B[k - l, u, j]
        out[k, i, j] = s
    return out


def fd_jacobian(fun, q, h=1e-6):
    """Central-difference Jacobian of ``fun`` w.r.t. every kernel entry at lag >= 1.

    Returns the Jacobian and the list of perturbed ``(i, j, k)`` entries.
    """
    L, n, _ = q.shape
    cols, idx = [], []
    for i in range(n):
        for j in range(n):
            for k in range(1, L):
                dq = np.zeros_like(q)
                dq[k, i, j] = h
                cols.append((fun(q + dq) - fun(q - dq)) / (2 * h))
                idx.append((i, j, k))
    return np.array(cols).T, idx


def kernel_covariance(q, mu, idx):
    """``V^q`` restricted to the entries ``idx``, straight from the defining formula."""
    V = np.zeros((len(idx), len(idx)))
    for a, (i, j, k) in enumerate(idx):
        for b, (i2, j2, k2) in enumerate(idx):
            if i == i2:
                V[a, b] = mu[i] * q[k, i, j] * (float(j == j2 and k == k2) - q[k2, i2, j2])
    return V


def tail_survival(q, K):
    """Unchecked diagonal tail sums ``sum_j sum_{k' > k} q_ij(k')`` for ``k <= K``."""
    rows = q.sum(axis=2)
    L, n = rows.shape
    out = np.zeros((K + 1, n, n))
    for k in range(K + 1):
        out[k][np.diag_indices(n)] = rows[k + 1 :].sum(axis=0) if k + 1 < L else 0.0
    return out
