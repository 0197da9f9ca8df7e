"""Matrix-sequence convolution algebra.

A matrix sequence is an ndarray of shape ``(K + 1, n, m)`` holding the
matrices ``A(0), ..., A(K)``.  Every operation is exact on the horizon it
returns: entries at lag ``k`` only depend on inputs at lags ``<= k``, so
truncating the inputs at ``K`` loses nothing on ``[0, K]``.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, EmptySubset, NegativeTail, NonzeroAtZero

TAIL_TOL = 1e-12


def as_horizon(A, K: int) -> np.ndarray:
    """Truncate or zero-pad ``A`` along the lag axis to lags ``0..K``."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] >= K + 1:
        return A[: K + 1]
    pad = np.zeros((K + 1 - A.shape[0],) + A.shape[1:])
    return np.concatenate([A, pad], axis=0)


def delta_identity(n: int, K: int) -> np.ndarray:
    """The convolution identity: ``I`` at lag 0, zero afterwards."""
    d = np.zeros((K + 1, n, n))
    d[0] = np.eye(n)
    return d


def horizon(A) -> int:
    return np.shape(A)[0] - 1


def convolve(A, B, K: int | None = None) -> np.ndarray:
    """Matrix convolution ``(A * B)(k) = sum_{l<=k} A(l) B(k-l)`` for ``k <= K``.

    ``K`` defaults to the shorter of the two horizons.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 3 or B.ndim != 3 or A.shape[2] != B.shape[1]:
        raise DimensionMismatch(f"cannot convolve shapes {A.shape} and {B.shape}")
    if K is None:
        K = min(horizon(A), horizon(B))
    A = as_horizon(A, K)
    B = as_horizon(B, K)
    out = np.empty((K + 1, A.shape[1], B.shape[2]))
    for k in range(K + 1):
        out[k] = np.einsum("lij,ljm->im", A[: k + 1], B[k::-1])
    return out


def n_fold(A, n: int, K: int) -> np.ndarray:
    """``A^(0) = delta I``, ``A^(n) = A * A^(n-1)``."""
    A = as_horizon(A, K)
    if A.shape[1] != A.shape[2]:
        raise DimensionMismatch("n-fold convolution needs square matrices")
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = delta_identity(A.shape[1], K)
    for _ in range(n):
        out = convolve(A, out, K)
    return out


def conv_inverse_of_delta_minus(A, K: int) -> np.ndarray:
    """Convolution inverse ``(delta I - A)^(-1)`` on lags ``0..K``.

    Solved by the renewal recursion ``psi(0) = I``,
    ``psi(k) = sum_{l=1}^k A(l) psi(k-l)``.  Requires ``A(0) = 0``.
    """
    A = as_horizon(A, K)
    n = A.shape[1]
    if A.shape[2] != n:
        raise DimensionMismatch("convolution inverse needs square matrices")
    if np.any(A[0] != 0):
        raise NonzeroAtZero("A(0) must vanish for (delta I - A) to be invertible this way")
    psi = np.zeros((K + 1, n, n))
    psi[0] = np.eye(n)
    for k in range(1, K + 1):
        psi[k] = np.einsum("lij,ljm->im", A[1 : k + 1], psi[k - 1 :: -1])
    return psi


def neumann_inverse(A, K: int) -> np.ndarray:
    """``sum_{n=0}^K A^(n)``; equals the convolution inverse on ``[0, K]`` when ``A(0) = 0``."""
    A = as_horizon(A, K)
    total = delta_identity(A.shape[1], K)
    power = total.copy()
    for _ in range(K):
        power = convolve(A, power, K)
        total += power
    return total


def cumulative(A) -> np.ndarray:
    """Running sum over lags, ``sum_{k' <= k} A(k')``."""
    return np.cumsum(np.asarray(A, dtype=float), axis=0)


def survival(A, row_mass=None, K: int | None = None) -> np.ndarray:
    """Diagonal tail-mass sequence.

    ``(S A)_ii(k) = m_i - sum_j sum_{k' <= k} A_ij(k')`` and zero off the
    diagonal.  With ``row_mass=None`` the tail is summed directly from the
    entries of ``A`` beyond ``k`` (the whole support must then be present).

    Parameters
    ----------
    A : ndarray, shape (L + 1, n, n)
    row_mass : array_like, shape (n,), optional
        Total mass ``m_i`` of row ``i`` over all lags.
    K : int, optional
        Output horizon; defaults to ``L``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    if K is None:
        K = horizon(A)
    rows = A.sum(axis=2)  # (L+1, n)
    if row_mass is None:
        full = np.concatenate([rows, np.zeros((max(K - horizon(A), 0), n))], axis=0)
        tail = np.cumsum(full[::-1], axis=0)[::-1]
        tail = np.concatenate([tail[1:], np.zeros((1, n))], axis=0)[: K + 1]
    else:
        m = np.asarray(row_mass, dtype=float)
        tail = m[None, :] - cumulative(as_horizon(rows, K))
    if np.any(tail < -TAIL_TOL):
        raise NegativeTail(f"negative tail mass {tail.min()!r}; row_mass too small")
    tail = np.clip(tail, 0.0, None)
    out = np.zeros((K + 1, n, n))
    idx = np.arange(n)
    out[:, idx, idx] = tail
    return out


def restrict(A, subset) -> np.ndarray:
    """Entries with both indices in ``subset`` (an index array)."""
    idx = np.asarray(subset, dtype=int)
    if idx.size == 0:
        raise EmptySubset("cannot restrict to an empty set of states")
    A = np.asarray(A)
    return A[:, idx][:, :, idx]


def diag_restrict(A, subset) -> np.ndarray:
    """Vector sequence ``(A_U)_i(k) = A_ii(k)`` for ``i`` in ``subset``; shape ``(K + 1, |U|)``."""
    idx = np.asarray(subset, dtype=int)
    if idx.size == 0:
        raise EmptySubset("cannot restrict to an empty set of states")
    return np.asarray(A)[:, idx, idx]


def convolve_vec(A, v, K: int | None = None) -> np.ndarray:
    """Matrix sequence times vector sequence: ``(A * v)_i(k) = sum_l sum_u A_iu(l) v_u(k-l)``."""
    v = np.asarray(v, dtype=float)
    return convolve(A, v[:, :, None], K)[:, :, 0]
