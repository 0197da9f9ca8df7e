"""Nonparametric estimators computed from a single observed trajectory."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chain import PartitionUD, SemiMarkovKernel, StateSpace
from .errors import EmptyTrajectory, UnvisitedState
from .renewal import distribution_sequence, markov_renewal_function, reliability_sequence
from .simulate import JumpCounts, Trajectory, counts


@dataclass(frozen=True, eq=False)
class KernelEstimate:
    """Empirical kernel ``q_hat[k, i, j]`` with per-state visit flags.

    Rows of states that were never left in ``[0, M]`` are all zero and have
    ``visited[i] == False``.  The lag axis runs up to the longest observed
    sojourn.
    """

    states: StateSpace
    q: np.ndarray
    visited: np.ndarray
    counts: JumpCounts
    M: int

    @property
    def mu_hat(self) -> np.ndarray:
        """Plug-in recurrence times ``M / N_i(M)`` (``inf`` for unvisited states)."""
        with np.errstate(divide="ignore"):
            return self.M / self.counts.N_i.astype(float)

    def require_visited(self, subset=None) -> None:
        idx = np.arange(self.states.size) if subset is None else np.asarray(subset, dtype=int)
        missing = [self.states.labels[i] for i in idx if not self.visited[i]]
        if missing:
            raise UnvisitedState(missing)

    def as_kernel(self) -> SemiMarkovKernel:
        self.require_visited()
        return SemiMarkovKernel(self.states, self.q)


def estimate_kernel(t: Trajectory) -> KernelEstimate:
    """``q_hat_ij(k) = #{n : J_{n-1}=i, J_n=j, X_n=k} / N_i(M)``."""
    if len(t) == 0:
        raise EmptyTrajectory("no jump observed in [0, M]; nothing to estimate")
    n = t.states.size
    c = counts(t)
    L = max(int(t.sojourns.max()), 1)
    tally = np.zeros((L + 1, n, n))
    np.add.at(tally, (t.sojourns, t.previous_states, t.jump_states), 1.0)
    visited = c.N_i > 0
    q = np.zeros_like(tally)
    q[:, visited, :] = tally[:, visited, :] / c.N_i[visited][None, :, None]
    return KernelEstimate(states=t.states, q=q, visited=visited, counts=c, M=t.horizon)


def estimate_psi(q_hat: KernelEstimate, K: int) -> np.ndarray:
    return markov_renewal_function(q_hat.q, K)


def estimate_distribution(q_hat: KernelEstimate, psi_hat: np.ndarray, K: int) -> np.ndarray:
    """``P_hat = psi_hat * S q_hat``; every state must have been visited."""
    q_hat.require_visited()
    return distribution_sequence(q_hat.q, K, psi=psi_hat)


def estimate_reliability(q_hat: KernelEstimate, partition: PartitionUD, K: int) -> np.ndarray:
    """``R_hat = psi_hat_UU * (S q_hat)_U``; every up state must have been visited."""
    up = partition.up_index
    q_hat.require_visited(up)
    return reliability_sequence(q_hat.q, up, K)


def default_horizon(kernel_or_kmax, n: int | None = None) -> int:
    """``2 |E| k_max``."""
    if isinstance(kernel_or_kmax, SemiMarkovKernel):
        return 2 * kernel_or_kmax.n * kernel_or_kmax.k_max
    return 2 * int(n) * int(kernel_or_kmax)


@dataclass(frozen=True, eq=False)
class EstimateBundle:
    kernel: KernelEstimate
    psi: np.ndarray
    P: np.ndarray | None
    R: np.ndarray | None
    partition: PartitionUD | None
    K: int

    @property
    def counts(self) -> JumpCounts:
        return self.kernel.counts

    @property
    def M(self) -> int:
        return self.kernel.M


def estimate_all(
    t: Trajectory,
    K: int,
    partition: PartitionUD | None = None,
    distribution: bool = True,
) -> EstimateBundle:
    """Run the whole pipeline ``q_hat -> psi_hat -> P_hat -> R_hat``.

    ``P_hat`` is skipped when ``distribution`` is false; ``R_hat`` is computed
    only when a partition is given.
    """
    q_hat = estimate_kernel(t)
    psi = estimate_psi(q_hat, K)
    P = estimate_distribution(q_hat, psi, K) if distribution else None
    R = estimate_reliability(q_hat, partition, K) if partition is not None else None
    return EstimateBundle(kernel=q_hat, psi=psi, P=P, R=R, partition=partition, K=K)


# -- estimate dump ------------------------------------------------------------


def bundle_to_dict(b: EstimateBundle) -> dict:
    labels = b.kernel.states.labels
    q = b.kernel.q
    triplets = [
        {"from": labels[i], "to": labels[j], "k": int(k), "p": float(q[k, i, j])}
        for i, j, k in sorted(zip(*np.nonzero(q.transpose(1, 2, 0))))
    ]
    doc = {
        "states": list(labels),
        "M": b.M,
        "K": b.K,
        "counts": {"N": b.counts.N, "N_i": dict(zip(labels, b.counts.N_i.tolist()))},
        "visited": dict(zip(labels, b.kernel.visited.tolist())),
        "q_hat": triplets,
        "psi_hat": b.psi.tolist(),
        "P_hat": None if b.P is None else b.P.tolist(),
        "R_hat": None,
    }
    if b.R is not None:
        doc["partition"] = {"up": list(b.partition.up), "down": list(b.partition.down)}
        doc["R_hat"] = {s: b.R[:, a].tolist() for a, s in enumerate(b.partition.up)}
    return doc


def save_bundle(b: EstimateBundle, path) -> None:
    # json writes floats with repr(), which round-trips doubles exactly
    Path(path).write_text(json.dumps(bundle_to_dict(b), indent=1) + "\n")
