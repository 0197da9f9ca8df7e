"""Asymptotic (co)variances of the kernel, renewal, distribution and reliability estimators.

Two independent routes are provided for every target:

* ``V_q``, ``V_psi``, ``V_P``, ``V_R`` assemble the full covariance matrix
  from its tensor-product representation, a sum over unit sequences
  ``delta^e`` weighted by ``mu_ii q_ij(k)`` minus a per-state correction;
* ``v_q_1d``, ``v_psi_1d``, ``v_P_1d``, ``v_R_1d`` evaluate a single diagonal
  entry with scalar convolutions of the auxiliary sequences ``Psi``, ``H``,
  ``C`` and ``D``.

The two must agree on the diagonal.  Tables are truncated at lag ``K``.
Unit sequences whose lag exceeds ``K`` still enter the distribution and
reliability tables through the survival term ``S delta^e``, which is 1 on
every lag below the unit's position, so those sums always run over the whole
kernel support.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .chain import ChainSummary, PartitionUD, SemiMarkovKernel, StateSpace, summarize
from .errors import BadLevel, SemiMarkovError
from .estimators import KernelEstimate
from .renewal import markov_renewal_function, restricted_renewal_function
from .seqalg import (
    as_horizon,
    convolve,
    convolve_vec,
    diag_restrict,
    restrict,
    survival,
)


# -- covariance tables ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CovarianceTable:
    """Covariance matrix over a list of coordinates.

    ``index`` holds ``(i, j, k)`` label triples for the kernel, renewal and
    distribution tables and ``(i, k)`` pairs for reliability.  ``matrix`` is
    ordered like ``index``.
    """

    target: str
    index: list[tuple]
    matrix: np.ndarray

    def __post_init__(self):
        pos = {e: p for p, e in enumerate(self.index)}
        object.__setattr__(self, "_pos", pos)

    def __len__(self):
        return len(self.index)

    def position(self, coord) -> int:
        coord = tuple(coord)
        try:
            return self._pos[coord]
        except KeyError:
            raise SemiMarkovError(f"coordinate {coord!r} not in the {self.target} table") from None

    def __getitem__(self, pair) -> float:
        a, b = pair
        return float(self.matrix[self.position(a), self.position(b)])

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    def variance(self, coord) -> float:
        p = self.position(coord)
        return float(self.matrix[p, p])

    def subset(self, coords) -> "CovarianceTable":
        coords = [tuple(c) for c in coords]
        p = [self.position(c) for c in coords]
        return CovarianceTable(self.target, coords, self.matrix[np.ix_(p, p)])

    def to_dict(self, diagonal_only: bool = False) -> dict:
        doc = {"target": self.target, "index": [list(e) for e in self.index]}
        if diagonal_only:
            doc["diagonal"] = self.diagonal().tolist()
        else:
            doc["matrix"] = self.matrix.ravel().tolist()
            doc["shape"] = list(self.matrix.shape)
        return doc


def triple_index(states: StateSpace, K: int) -> list[tuple[str, str, int]]:
    """Coordinates ``(i, j, k)`` in lexicographic order, matching :func:`flatten`."""
    lab = states.labels
    return [(a, b, k) for a in lab for b in lab for k in range(K + 1)]


def flatten(A) -> np.ndarray:
    """Matrix sequence ``(K+1, n, m)`` -> vector ordered by ``(i, j, k)``."""
    return np.asarray(A).transpose(1, 2, 0).ravel()


def flatten_vec(v) -> np.ndarray:
    """Vector sequence ``(K+1, m)`` -> vector ordered by ``(i, k)``."""
    return np.asarray(v).T.ravel()


def _mu(kernel: SemiMarkovKernel, summary: ChainSummary | None) -> np.ndarray:
    if summary is None:
        summary = summarize(kernel)
    return np.asarray(summary.mu, dtype=float)


def _support(q, max_lag=None):
    """Kernel entries ``(i, j, k)`` with positive mass, ordered by ``(i, j, k)``."""
    q = np.asarray(q)
    ks, is_, js = np.nonzero(q if max_lag is None else q[: max_lag + 1])
    order = np.lexsort((ks, js, is_))
    return [(int(is_[o]), int(js[o]), int(ks[o])) for o in order]


def unit_sequence(n: int, e, length: int, m: int | None = None) -> np.ndarray:
    """``delta^e``: a single 1 at ``e = (i, j, k)`` in an ``(length, n, m)`` sequence."""
    i, j, k = e
    d = np.zeros((max(length, k + 1), n, n if m is None else m))
    d[k, i, j] = 1.0
    return d


def masked_kernel(q, i: int) -> np.ndarray:
    """``q^i``: row ``i`` of ``q`` kept, all other rows zero."""
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    out[:, i, :] = q[:, i, :]
    return out


# -- matrix (tensor-product) route ------------------------------------------


def _assemble(weights_e, rows_e, weights_i, rows_i) -> np.ndarray:
    """``sum_e w_e f_e f_e^T - sum_i w_i g_i g_i^T`` (plus further terms by the caller)."""
    F = np.array(rows_e)
    G = np.array(rows_i)
    V = (F.T * np.asarray(weights_e)) @ F - (G.T * np.asarray(weights_i)) @ G
    return V


def _table_q(q, mu, K) -> np.ndarray:
    q = as_horizon(q, K)
    n = q.shape[1]
    v = flatten(q)  # (i, j, k) order
    row = np.repeat(np.arange(n), n * (K + 1))
    same = row[:, None] == row[None, :]
    V = (mu[row] * v)[:, None] * (np.eye(v.size) - v[None, :])
    return np.where(same, V, 0.0)


def _table_psi(q, mu, K) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = q.shape[1]
    psi = markov_renewal_function(q, K)
    # psi * delta^e * psi vanishes on [0, K] when the unit sits beyond K
    support = _support(q, max_lag=K)
    f_rows = [flatten(convolve(convolve(psi, unit_sequence(n, e, K + 1), K), psi, K)) for e in support]
    w_e = [mu[i] * q[k, i, j] for i, j, k in support]
    g_rows = [flatten(convolve(convolve(psi, masked_kernel(q, i), K), psi, K)) for i in range(n)]
    if not f_rows:
        return np.zeros((n * n * (K + 1),) * 2)
    return _assemble(w_e, f_rows, mu, g_rows)


def _table_P(q, mu, K) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = q.shape[1]
    psi = markov_renewal_function(q, K)
    Sq = survival(q, K=K)
    support = _support(q)

    def influence(a):
        # psi * a * psi * S q + psi * S a
        first = convolve(convolve(convolve(psi, a, K), psi, K), Sq, K)
        return flatten(first + convolve(psi, survival(a, K=K), K))

    f_rows = [influence(unit_sequence(n, e, K + 1)) for e in support]
    w_e = [mu[i] * q[k, i, j] for i, j, k in support]
    g_rows = [influence(masked_kernel(q, i)) for i in range(n)]
    return _assemble(w_e, f_rows, mu, g_rows)


def _table_R(q, mu, up, K) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = q.shape[1]
    up = np.asarray(up, dtype=int)
    in_up = np.zeros(n, dtype=bool)
    in_up[up] = True
    psi_uu = restricted_renewal_function(q, up, K)
    Sq_u = diag_restrict(survival(q, K=K), up)

    def survival_term(a):
        # psi_UU * (S a)_U
        return convolve_vec(psi_uu, diag_restrict(survival(a, K=K), up), K)

    def influence(a):
        first = convolve_vec(convolve(convolve(psi_uu, restrict(a, up), K), psi_uu, K), Sq_u, K)
        return flatten_vec(first + survival_term(a))

    uu, ud = [], []
    for e in _support(q):
        i, j, k = e
        if not in_up[i]:
            continue  # both terms vanish for rows in D
        (uu if in_up[j] else ud).append(e)
    f_uu = [influence(unit_sequence(n, e, K + 1)) for e in uu]
    f_ud = [flatten_vec(survival_term(unit_sequence(n, e, K + 1))) for e in ud]
    g = [influence(masked_kernel(q, i)) for i in up]
    dim = up.size * (K + 1)
    V = np.zeros((dim, dim))
    if f_uu or g:
        V1 = np.array(f_uu).reshape(-1, dim)
        V += (V1.T * np.array([mu[i] * q[k, i, j] for i, j, k in uu])) @ V1
        G = np.array(g).reshape(-1, dim)
        V -= (G.T * mu[up]) @ G
    if f_ud:
        F3 = np.array(f_ud)
        V += (F3.T * np.array([mu[i] * q[k, i, j] for i, j, k in ud])) @ F3
    return V


def V_q(kernel: SemiMarkovKernel, summary: ChainSummary | None = None, K: int | None = None) -> CovarianceTable:
    """Asymptotic covariance of ``sqrt(M) (q_hat - q)``.

    ``V_(i,j,k),(i',j',k') = mu_ii 1{i=i'} q_ij(k) (1{j=j', k=k'} - q_i'j'(k'))``.
    """
    K = kernel.k_max if K is None else K
    return CovarianceTable("q", triple_index(kernel.states, K), _table_q(kernel.q, _mu(kernel, summary), K))


def V_psi(kernel: SemiMarkovKernel, summary: ChainSummary | None = None, K: int | None = None) -> CovarianceTable:
    K = kernel.k_max if K is None else K
    return CovarianceTable("psi", triple_index(kernel.states, K), _table_psi(kernel.q, _mu(kernel, summary), K))


def V_P(kernel: SemiMarkovKernel, summary: ChainSummary | None = None, K: int | None = None) -> CovarianceTable:
    K = kernel.k_max if K is None else K
    return CovarianceTable("P", triple_index(kernel.states, K), _table_P(kernel.q, _mu(kernel, summary), K))


def V_R(
    kernel: SemiMarkovKernel,
    summary: ChainSummary | None = None,
    partition: PartitionUD | None = None,
    K: int | None = None,
) -> CovarianceTable:
    if partition is None:
        raise SemiMarkovError("the reliability table needs a partition U, D")
    K = kernel.k_max if K is None else K
    index = [(s, k) for s in partition.up for k in range(K + 1)]
    return CovarianceTable(
        "R", index, _table_R(kernel.q, _mu(kernel, summary), partition.up_index, K)
    )


# -- scalar (1-d) route ----------------------------------------------------


def _sc(a, b, K: int) -> np.ndarray:
    """Scalar sequence convolution on lags ``0..K``."""
    return np.convolve(np.asarray(a)[: K + 1], np.asarray(b)[: K + 1])[: K + 1]


@dataclass(frozen=True, eq=False)
class AuxSequences:
    """Auxiliary sequences used by the 1-d variance formulas, on lags ``0..K``.

    ``q_bar[k, i, j] = mu_ii q_ij(k)``, ``Psi`` is the running sum of ``psi``
    and ``H[k, j]`` the sojourn distribution function of state ``j``.  The
    ``*_uu`` fields are filled when a partition is given.
    """

    q: np.ndarray
    mu: np.ndarray
    K: int
    q_bar: np.ndarray
    psi: np.ndarray
    Psi: np.ndarray
    H: np.ndarray
    up: np.ndarray | None = None
    psi_uu: np.ndarray | None = None
    Psi_uu: np.ndarray | None = None

    def C(self, i, j, it, jt) -> np.ndarray:
        """``C^{ij}_{it jt} = psi_{i it} * psi_{jt j} * (1 - H_j)``."""
        K = self.K
        return _sc(_sc(self.psi[:, i, it], self.psi[:, jt, j], K), 1.0 - self.H[:, j], K)

    def D(self, a, at, bt) -> np.ndarray:
        """``D^a_{at bt} = sum_{c in U} psi_UU[a, at] * psi_UU[bt, c] * (1 - H_c)``; local U indices."""
        K = self.K
        acc = np.zeros(K + 1)
        for c, j in enumerate(self.up):
            acc += _sc(_sc(self.psi_uu[:, a, at], self.psi_uu[:, bt, c], K), 1.0 - self.H[:, j], K)
        return acc


def aux_sequences(q, mu, K: int, up=None) -> AuxSequences:
    q = as_horizon(q, K)
    mu = np.asarray(mu, dtype=float)
    psi = markov_renewal_function(q, K)
    H = np.cumsum(q.sum(axis=2), axis=0)
    extra = {}
    if up is not None:
        up = np.asarray(up, dtype=int)
        psi_uu = restricted_renewal_function(q, up, K)
        extra = dict(up=up, psi_uu=psi_uu, Psi_uu=np.cumsum(psi_uu, axis=0))
    return AuxSequences(
        q=q, mu=mu, K=K, q_bar=mu[None, :, None] * q, psi=psi,
        Psi=np.cumsum(psi, axis=0), H=H, **extra,
    )


def _v_q(q, mu, i, j, k) -> float:
    p = q[k, i, j] if k < q.shape[0] else 0.0
    return float(mu[i] * p * (1.0 - p))


def _v_psi(aux: AuxSequences, i, j, k) -> float:
    q, psi, n = aux.q, aux.psi, aux.q.shape[1]
    total = 0.0
    for it in range(n):
        sq = 0.0
        lin = 0.0
        for jt in range(n):
            pp = _sc(psi[:, i, it], psi[:, jt, j], k)
            sq += _sc(pp**2, q[:, it, jt], k)[k]
            lin += _sc(pp, q[:, it, jt], k)[k]
        total += aux.mu[it] * (sq - lin**2)
    return float(total)


def _v_P(aux: AuxSequences, i, j, k) -> float:
    q, n = aux.q, aux.q.shape[1]
    total = 0.0
    for it in range(n):
        ind = 1.0 if it == j else 0.0
        sq = 0.0
        lin = np.zeros(aux.K + 1)
        for jt in range(n):
            C = aux.C(i, j, it, jt)
            sq += _sc((C - ind * aux.Psi[:, i, j]) ** 2, q[:, it, jt], k)[k]
            lin += _sc(C, q[:, it, jt], aux.K)
        lin -= ind * _sc(aux.psi[:, i, j], aux.H[:, j], aux.K)
        total += aux.mu[it] * (sq - lin[k] ** 2)
    return float(total)


def _v_R(aux: AuxSequences, a, k) -> float:
    """Reliability variance at local up-index ``a`` and lag ``k``.

    Three terms: the squared up-to-up influence, minus the squared
    per-state mean, plus the up-to-down term ``sum_{jt in D} [Psi_UU^2 * q](k)``.
    """
    q, up, K = aux.q, aux.up, aux.K
    n = q.shape[1]
    down = [j for j in range(n) if j not in set(up.tolist())]
    total = 0.0
    for at, it in enumerate(up):
        Psi = aux.Psi_uu[:, a, at]
        sq = 0.0
        lin = np.zeros(K + 1)
        for bt, jt in enumerate(up):
            D = aux.D(a, at, bt)
            sq += _sc((D - Psi) ** 2, q[:, it, jt], k)[k]
            lin += _sc(D, q[:, it, jt], K)
        lin -= _sc(aux.psi_uu[:, a, at], aux.H[:, it], K)
        to_down = sum(_sc(Psi**2, q[:, it, jt], k)[k] for jt in down)
        total += aux.mu[it] * (sq - lin[k] ** 2 + to_down)
    return float(total)


def v_q_1d(kernel: SemiMarkovKernel, summary: ChainSummary | None, i, j, k) -> float:
    """``mu_ii q_ij(k) (1 - q_ij(k))``."""
    s = kernel.states
    return _v_q(kernel.q, _mu(kernel, summary), s.index(i), s.index(j), int(k))


def v_psi_1d(kernel: SemiMarkovKernel, summary: ChainSummary | None, i, j, k) -> float:
    s = kernel.states
    aux = aux_sequences(kernel.q, _mu(kernel, summary), int(k))
    return _v_psi(aux, s.index(i), s.index(j), int(k))


def v_P_1d(kernel: SemiMarkovKernel, summary: ChainSummary | None, i, j, k) -> float:
    s = kernel.states
    aux = aux_sequences(kernel.q, _mu(kernel, summary), int(k))
    return _v_P(aux, s.index(i), s.index(j), int(k))


def v_R_1d(kernel: SemiMarkovKernel, summary: ChainSummary | None, partition: PartitionUD, i, k) -> float:
    aux = aux_sequences(kernel.q, _mu(kernel, summary), int(k), up=partition.up_index)
    return _v_R(aux, partition.up.index(str(i)), int(k))


# -- plug-in and confidence intervals -----------------------------------------


TABLES: dict[str, Callable] = {"q": _table_q, "psi": _table_psi, "P": _table_P}


def plug_in(target: str, q_hat: KernelEstimate, K: int, partition: PartitionUD | None = None) -> CovarianceTable:
    """Covariance table evaluated at ``q_hat`` with ``mu_ii`` replaced by ``M / N_i(M)``.

    ``target`` is one of ``"q"``, ``"psi"``, ``"P"``, ``"R"``.
    """
    q_hat.require_visited()
    mu = q_hat.mu_hat
    states = q_hat.states
    if target == "R":
        if partition is None:
            raise SemiMarkovError("the reliability table needs a partition U, D")
        index = [(s, k) for s in partition.up for k in range(K + 1)]
        return CovarianceTable("R", index, _table_R(q_hat.q, mu, partition.up_index, K))
    if target not in TABLES:
        raise SemiMarkovError(f"unknown target {target!r}")
    return CovarianceTable(target, triple_index(states, K), TABLES[target](q_hat.q, mu, K))


def plug_in_variance_q(q_hat: KernelEstimate, i: int, j: int, k: int) -> float:
    """Plug-in ``v_q`` for one coordinate (state indices); cheap path used by coverage runs."""
    q_hat.require_visited([i])
    return _v_q(q_hat.q, q_hat.mu_hat, i, j, k)


def normal_quantile(p: float) -> float:
    return float(ndtri(p))


def confidence_interval(estimate: float, variance: float, M: int, level: float = 0.95) -> tuple[float, float]:
    """Normal-approximation interval ``estimate +- z sqrt(variance / M)``."""
    if not 0.0 < level < 1.0:
        raise BadLevel(f"confidence level must lie in (0, 1), got {level!r}")
    if variance < 0:
        raise SemiMarkovError(f"variance must be nonnegative, got {variance!r}")
    half = normal_quantile(0.5 + level / 2.0) * np.sqrt(variance / M)
    return float(estimate - half), float(estimate + half)

