"""Renewal-equation solutions built from a kernel array.

These are shared by the exact (true-kernel) and plug-in (estimated-kernel)
paths: pass ``kernel.q`` or an estimated ``q_hat``.
"""

from __future__ import annotations

import numpy as np

from .seqalg import (
    conv_inverse_of_delta_minus,
    convolve,
    convolve_vec,
    diag_restrict,
    restrict,
    survival,
)


def markov_renewal_function(q, K: int) -> np.ndarray:
    """``psi = (delta I - q)^(-1)`` on lags ``0..K``."""
    return conv_inverse_of_delta_minus(q, K)


def distribution_sequence(q, K: int, psi=None) -> np.ndarray:
    """``P = psi * S q``: ``P[k, i, j] = P_i(Z_k = j)``."""
    q = np.asarray(q, dtype=float)
    if psi is None:
        psi = markov_renewal_function(q, K)
    Sq = survival(q, row_mass=np.ones(q.shape[1]), K=K)
    return convolve(psi, Sq, K)


def restricted_renewal_function(q, up, K: int) -> np.ndarray:
    """``psi_UU = (delta I - q_UU)^(-1)``; restriction happens before inversion."""
    return conv_inverse_of_delta_minus(restrict(q, up), K)


def reliability_sequence(q, up, K: int) -> np.ndarray:
    """``R = psi_UU * (S q)_U``; ``R[k, a] = P_{U[a]}(T_D > k)``."""
    q = np.asarray(q, dtype=float)
    up = np.asarray(up, dtype=int)
    psi_uu = restricted_renewal_function(q, up, K)
    Sq_u = diag_restrict(survival(q, row_mass=np.ones(q.shape[1]), K=K), up)
    return convolve_vec(psi_uu, Sq_u, K)
