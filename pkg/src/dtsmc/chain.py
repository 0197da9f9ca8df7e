"""Semi-Markov kernels, embedded-chain summaries and the standing assumptions.

A kernel is stored as an array ``q`` of shape ``(k_max + 1, n, n)`` with
``q[k, i, j]`` the probability of jumping from ``i`` to ``j`` after a sojourn
of exactly ``k`` steps.  Lag-major layout is used throughout the package so
that ``q[k]`` is the matrix at lag ``k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import EmptySubset, KernelError, NotIrreducible

ROW_TOL = 1e-12


@dataclass(frozen=True)
class StateSpace:
    """Ordered, distinct state labels."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        if len(set(labels)) != len(labels):
            raise KernelError(f"duplicate state labels in {labels!r}")
        if len(labels) < 1:
            raise KernelError("state space is empty")
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KernelError(f"unknown state {label!r}") from None

    def indices(self, labels: Iterable) -> list[int]:
        return [self.index(s) for s in labels]

    def subspace(self, labels: Iterable) -> "StateSpace":
        keep = set(map(str, labels))
        return StateSpace(tuple(s for s in self.labels if s in keep))


@dataclass(frozen=True)
class PartitionUD:
    """Nontrivial split of the state space into up states ``U`` and down states ``D``."""

    states: StateSpace
    up: tuple[str, ...]
    down: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        up = tuple(str(s) for s in self.up)
        if not up:
            raise EmptySubset("the up set U must be nonempty")
        idx = set(self.states.indices(up))
        if len(idx) != len(up):
            raise KernelError(f"duplicate labels in U: {up!r}")
        down = tuple(s for s in self.states.labels if s not in up)
        if not down:
            raise EmptySubset("the down set D must be nonempty")
        # keep U in state-space order so restricted sequences line up with it
        object.__setattr__(self, "up", tuple(s for s in self.states.labels if s in up))
        object.__setattr__(self, "down", down)

    @property
    def up_index(self) -> np.ndarray:
        return np.array(self.states.indices(self.up), dtype=int)

    @property
    def down_index(self) -> np.ndarray:
        return np.array(self.states.indices(self.down), dtype=int)


@dataclass(frozen=True, eq=False)
class SemiMarkovKernel:
    """Truncated semi-Markov kernel ``q[k, i, j]`` for ``0 <= k <= k_max``."""

    states: StateSpace
    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        n = self.states.size
        if q.ndim != 3 or q.shape[1:] != (n, n):
            raise KernelError(f"kernel array must have shape (k_max+1, {n}, {n}), got {q.shape}")
        if q.shape[0] < 2:
            raise KernelError("k_max must be at least 1")
        if not np.all(np.isfinite(q)):
            raise KernelError("kernel has non-finite entries")
        if np.any(q < 0) or np.any(q > 1):
            raise KernelError("kernel entries must lie in [0, 1]")
        if np.any(q[0] != 0):
            raise KernelError("q_ij(0) must be 0 for all i, j")
        rows = q.sum(axis=(0, 2))
        bad = np.flatnonzero(np.abs(rows - 1.0) > ROW_TOL)
        if bad.size:
            i = bad[0]
            raise KernelError(
                f"row {self.states.labels[i]!r} sums to {rows[i]!r}, expected 1"
            )
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.states.size

    @property
    def k_max(self) -> int:
        return self.q.shape[0] - 1

    def __repr__(self):
        return f"SemiMarkovKernel(states={list(self.states.labels)}, k_max={self.k_max})"

    @classmethod
    def from_entries(cls, states: Sequence, k_max: int, entries) -> "SemiMarkovKernel":
        """Build a kernel from ``(from, to, k, p)`` tuples or a ``{(from, to, k): p}`` mapping."""
        space = states if isinstance(states, StateSpace) else StateSpace(tuple(states))
        q = np.zeros((int(k_max) + 1, space.size, space.size))
        items = entries.items() if isinstance(entries, Mapping) else (
            ((a, b, k), p) for a, b, k, p in entries
        )
        for (a, b, k), p in items:
            k = int(k)
            if not 0 <= k <= k_max:
                raise KernelError(f"sojourn {k} outside [0, {k_max}]")
            q[k, space.index(a), space.index(b)] += float(p)
        return cls(space, q)

    def entries(self) -> list[tuple[str, str, int, float]]:
        """Nonzero entries as ``(from, to, k, p)`` tuples, ordered by (from, to, k)."""
        labels = self.states.labels
        out = []
        for i in range(self.n):
            for j in range(self.n):
                for k in np.flatnonzero(self.q[:, i, j]):
                    out.append((labels[i], labels[j], int(k), float(self.q[k, i, j])))
        return out

    def relabel(self, order: Sequence[str]) -> "SemiMarkovKernel":
        """Same kernel with states listed in ``order``."""
        idx = self.states.indices(order)
        return SemiMarkovKernel(StateSpace(tuple(order)), self.q[:, idx][:, :, idx])


def random_kernel(
    n: int,
    k_max: int,
    rng: np.random.Generator,
    density: float = 1.0,
    labels: Sequence[str] | None = None,
) -> SemiMarkovKernel:
    """Random irreducible kernel with support on ``1..k_max``.

    ``density`` is the probability that an entry ``(i, j, k)`` is allowed to be
    nonzero.  A cyclic ``i -> i+1`` entry is always kept so the embedded chain
    is irreducible.
    """
    if labels is None:
        labels = [chr(ord("a") + i) for i in range(n)] if n <= 26 else [f"s{i}" for i in range(n)]
    w = rng.random((k_max + 1, n, n))
    w[0] = 0.0
    if density < 1.0:
        w[1:] *= rng.random((k_max, n, n)) < density
    for i in range(n):
        k = rng.integers(1, k_max + 1)
        w[k, i, (i + 1) % n] += 0.1 + rng.random()
    q = w / w.sum(axis=(0, 2))[None, :, None]
    return SemiMarkovKernel(StateSpace(tuple(labels)), q)


def embedded_matrix(kernel: SemiMarkovKernel) -> np.ndarray:
    """Transition matrix of the embedded jump chain, ``q^J_ij = sum_k q_ij(k)``."""
    return kernel.q.sum(axis=0)


def is_irreducible(P: np.ndarray) -> bool:
    ncomp, _ = connected_components(P > 0, directed=True, connection="strong")
    return ncomp == 1


@dataclass(frozen=True, eq=False)
class ChainSummary:
    """Stationary quantities of the Markov renewal chain.

    Attributes
    ----------
    nu : ndarray, shape (n,)
        Invariant law of the embedded chain.
    mean_sojourn : ndarray, shape (n,)
        ``E_i S_1``.
    m_bar : float
        ``sum_i nu_i E_i S_1``.
    mu : ndarray, shape (n,)
        Mean recurrence times ``mu_ii = m_bar / nu_i``.
    """

    nu: np.ndarray
    mean_sojourn: np.ndarray
    m_bar: float
    mu: np.ndarray


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Invariant probability of an irreducible stochastic matrix.

    Solves ``(P^T - I) nu = 0`` with the last equation replaced by the
    normalization ``sum(nu) = 1``.
    """
    n = P.shape[0]
    if not is_irreducible(P):
        raise NotIrreducible("embedded chain is reducible; invariant law is not unique")
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    nu = np.linalg.solve(A, b)
    return nu / nu.sum()


def summarize(kernel: SemiMarkovKernel) -> ChainSummary:
    nu = stationary_distribution(embedded_matrix(kernel))
    lags = np.arange(kernel.k_max + 1)
    mean_sojourn = np.einsum("k,kij->i", lags, kernel.q)
    m_bar = float(nu @ mean_sojourn)
    return ChainSummary(nu=nu, mean_sojourn=mean_sojourn, m_bar=m_bar, mu=m_bar / nu)


@dataclass(frozen=True)
class AssumptionReport:
    irreducible: bool
    aperiodic: bool
    positive_recurrent: bool
    checked_up_to: int
    period: int | None = None

    @property
    def ok(self) -> bool:
        return self.irreducible and self.aperiodic and self.positive_recurrent


def check_assumptions(kernel: SemiMarkovKernel, k_check: int | None = None) -> AssumptionReport:
    """Check irreducibility, aperiodicity and positive recurrence.

    Aperiodicity is decided from the gcd of the lags ``k <= k_check`` at which
    some ``q^(n)_ii(k)`` is positive, with ``k_check = 4 |E| k_max`` by default.
    The result is exact only up to ``checked_up_to``.
    """
    from .seqalg import conv_inverse_of_delta_minus

    if k_check is None:
        k_check = 4 * kernel.n * kernel.k_max
    irreducible = is_irreducible(embedded_matrix(kernel))
    # sum_{n>=1} q^(n) = psi - delta I has the same support pattern as the return times
    returns = conv_inverse_of_delta_minus(kernel.q, k_check)
    diag = np.einsum("kii->ik", returns)[:, 1:]
    periods = []
    for i in range(kernel.n):
        lags = np.flatnonzero(diag[i] > 0) + 1
        periods.append(reduce(math.gcd, lags.tolist(), 0))
    if irreducible:
        period = periods[0] if len(set(periods)) == 1 else reduce(math.gcd, periods, 0)
    else:
        period = None
    aperiodic = all(p == 1 for p in periods)
    return AssumptionReport(
        irreducible=irreducible,
        aperiodic=aperiodic,
        # finite E, bounded sojourns: irreducible implies positive recurrent
        positive_recurrent=irreducible,
        checked_up_to=k_check,
        period=period,
    )


# -- kernel spec file -------------------------------------------------------


def kernel_to_dict(kernel: SemiMarkovKernel) -> dict:
    return {
        "states": list(kernel.states.labels),
        "k_max": kernel.k_max,
        "entries": [
            {"from": a, "to": b, "k": k, "p": p} for a, b, k, p in kernel.entries()
        ],
    }


def kernel_from_dict(doc) -> SemiMarkovKernel:
    """Validate and build a kernel from a parsed kernel spec document.

    Raises :class:`KernelError` naming the offending field.
    """
    if not isinstance(doc, Mapping):
        raise KernelError("kernel spec: top level must be an object")
    for key in ("states", "k_max", "entries"):
        if key not in doc:
            raise KernelError(f"kernel spec: missing field {key!r}")
    states = doc["states"]
    if not isinstance(states, list) or not states:
        raise KernelError("kernel spec: 'states' must be a nonempty list")
    k_max = doc["k_max"]
    if isinstance(k_max, bool) or not isinstance(k_max, int) or k_max < 1:
        raise KernelError(f"kernel spec: 'k_max' must be an integer >= 1, got {k_max!r}")
    if not isinstance(doc["entries"], list):
        raise KernelError("kernel spec: 'entries' must be a list")
    space = StateSpace(tuple(states))
    q = np.zeros((k_max + 1, space.size, space.size))
    for pos, e in enumerate(doc["entries"]):
        where = f"kernel spec: entries[{pos}]"
        if not isinstance(e, Mapping):
            raise KernelError(f"{where}: must be an object")
        for key in ("from", "to", "k", "p"):
            if key not in e:
                raise KernelError(f"{where}: missing field {key!r}")
        if str(e["from"]) not in space.labels:
            raise KernelError(f"{where}.from: unknown state {e['from']!r}")
        if str(e["to"]) not in space.labels:
            raise KernelError(f"{where}.to: unknown state {e['to']!r}")
        k = e["k"]
        if isinstance(k, bool) or not isinstance(k, int) or not 1 <= k <= k_max:
            raise KernelError(f"{where}.k: must be an integer in [1, {k_max}], got {k!r}")
        p = e["p"]
        if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0 <= p <= 1:
            raise KernelError(f"{where}.p: must be a number in [0, 1], got {p!r}")
        q[k, space.index(e["from"]), space.index(e["to"])] += float(p)
    return SemiMarkovKernel(space, q)


def load_kernel(path) -> SemiMarkovKernel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise KernelError(f"cannot read kernel file {str(path)!r}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise KernelError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    try:
        return kernel_from_dict(doc)
    except KernelError as exc:
        raise KernelError(f"{path}: {exc}") from None


def save_kernel(kernel: SemiMarkovKernel, path) -> None:
    Path(path).write_text(json.dumps(kernel_to_dict(kernel), indent=2) + "\n")
