"""Sampling Markov renewal paths and the counts the estimators need."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chain import SemiMarkovKernel, StateSpace
from .errors import SemiMarkovError, TimeBeyondHorizon


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One Markov renewal path observed on ``[0, M]``.

    ``jump_states[n-1]``, ``sojourns[n-1]`` and ``cumtimes[n-1]`` are ``J_n``,
    ``X_n`` and ``S_n`` for ``n = 1..N(M)``; the initial state ``J_0`` is kept
    separately.  States are stored as indices into ``states``.
    """

    states: StateSpace
    initial: int
    jump_states: np.ndarray
    sojourns: np.ndarray
    cumtimes: np.ndarray
    horizon: int

    def __post_init__(self):
        js = np.asarray(self.jump_states, dtype=np.int64)
        xs = np.asarray(self.sojourns, dtype=np.int64)
        ss = np.asarray(self.cumtimes, dtype=np.int64)
        if not (js.shape == xs.shape == ss.shape) or js.ndim != 1:
            raise SemiMarkovError("trajectory arrays must be 1-d and of equal length")
        if xs.size:
            if np.any(xs < 1):
                raise SemiMarkovError("sojourns must be >= 1")
            if np.any(np.cumsum(xs) != ss):
                raise SemiMarkovError("cumulative times must be partial sums of the sojourns")
            if ss[-1] > self.horizon:
                raise SemiMarkovError("last jump lies beyond the horizon")
            if js.min() < 0 or js.max() >= self.states.size:
                raise SemiMarkovError("state index out of range")
        for a in (js, xs, ss):
            a.setflags(write=False)
        object.__setattr__(self, "jump_states", js)
        object.__setattr__(self, "sojourns", xs)
        object.__setattr__(self, "cumtimes", ss)

    def __len__(self) -> int:
        return int(self.jump_states.size)

    @property
    def previous_states(self) -> np.ndarray:
        """``J_{n-1}`` for ``n = 1..N(M)``."""
        return np.concatenate([[self.initial], self.jump_states[:-1]]).astype(np.int64)[: len(self)]

    def path(self) -> list[str]:
        """State labels ``J_0, J_1, ..., J_N``."""
        labels = self.states.labels
        return [labels[self.initial]] + [labels[j] for j in self.jump_states]


@dataclass(frozen=True, eq=False)
class JumpCounts:
    """``N(M)`` and the per-state departure counts ``N_i(M)``."""

    N: int
    N_i: np.ndarray


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def child_seed(master_seed: int, replication: int) -> np.random.SeedSequence:
    """Seed of replication ``r``: ``SeedSequence(master_seed, spawn_key=(r,))``.

    The child depends only on ``(master_seed, r)``, so serial and parallel
    harness runs draw identical streams.
    """
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(replication),))


def _row_outcomes(kernel: SemiMarkovKernel, u: np.ndarray) -> list[list[int]]:
    """Inverse-CDF outcome of every uniform for every source state.

    Outcomes index the flattened ``(j, k)`` grid of row ``i``: ``o = j * (k_max+1) + k``.
    """
    out = []
    for i in range(kernel.n):
        pmf = kernel.q[:, i, :].T.ravel()
        cdf = np.cumsum(pmf)
        o = np.searchsorted(cdf, u, side="right")
        # u can exceed cdf[-1] by rounding; map onto the last outcome with mass
        o = np.minimum(o, np.flatnonzero(pmf)[-1])
        out.append(o.tolist())
    return out


def simulate(kernel: SemiMarkovKernel, i0, M: int, seed=None) -> Trajectory:
    """Sample ``(J_n, X_n, S_n)`` until the first jump after ``M``, which is discarded.

    Exactly ``M + 1`` uniforms are drawn (``N(M) <= M`` since sojourns are at
    least 1), so the path is a deterministic function of ``(kernel, i0, M, seed)``.
    """
    i0 = kernel.states.index(i0) if not isinstance(i0, (int, np.integer)) else int(i0)
    if not 0 <= i0 < kernel.n:
        raise SemiMarkovError(f"initial state index {i0} out of range")
    M = int(M)
    if M < 0:
        raise SemiMarkovError("horizon M must be nonnegative")
    rng = _as_generator(seed)
    u = rng.random(M + 1)
    outcomes = _row_outcomes(kernel, u)
    width = kernel.k_max + 1
    js, xs = [], []
    state, t = i0, 0
    for n in range(M + 1):
        j, k = divmod(outcomes[state][n], width)
        t += k
        if t > M:
            break
        js.append(j)
        xs.append(k)
        state = j
    xs_arr = np.array(xs, dtype=np.int64)
    return Trajectory(
        states=kernel.states,
        initial=i0,
        jump_states=np.array(js, dtype=np.int64),
        sojourns=xs_arr,
        cumtimes=np.cumsum(xs_arr),
        horizon=M,
    )


def counts(t: Trajectory) -> JumpCounts:
    N_i = np.bincount(t.previous_states, minlength=t.states.size)
    return JumpCounts(N=len(t), N_i=N_i)


def semi_markov_state(t: Trajectory, k: int) -> str:
    """``Z_k = J_{N(k)}`` with ``N(k) = max{n : S_n <= k}``."""
    if k < 0 or k > t.horizon:
        raise TimeBeyondHorizon(f"time {k} outside the observed window [0, {t.horizon}]")
    n = int(np.searchsorted(t.cumtimes, k, side="right"))
    idx = t.initial if n == 0 else int(t.jump_states[n - 1])
    return t.states.labels[idx]


# -- trajectory CSV --------------------------------------------------------

CSV_HEADER = ["n", "state", "sojourn", "cumtime"]


def trajectory_to_csv(t: Trajectory) -> str:
    """CSV text: two ``#`` metadata lines (state space, horizon), header, then rows.

    Row 0 is ``J_0`` with sojourn and cumulative time 0.
    """
    buf = io.StringIO()
    buf.write("# states: " + ",".join(t.states.labels) + "\n")
    buf.write(f"# horizon: {t.horizon}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    labels = t.states.labels
    w.writerow([0, labels[t.initial], 0, 0])
    for n, (j, x, s) in enumerate(zip(t.jump_states, t.sojourns, t.cumtimes), start=1):
        w.writerow([n, labels[j], int(x), int(s)])
    return buf.getvalue()


def trajectory_from_csv(text: str, states: StateSpace | None = None) -> Trajectory:
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    if not rows or rows[0] != CSV_HEADER:
        raise SemiMarkovError(f"trajectory CSV must start with header {','.join(CSV_HEADER)}")
    rows = rows[1:]
    if not rows:
        raise SemiMarkovError("trajectory CSV has no initial-state row")
    if states is None:
        if "states" in meta:
            states = StateSpace(tuple(s for s in meta["states"].split(",") if s))
        else:
            seen = dict.fromkeys(r[1] for r in rows)
            states = StateSpace(tuple(seen))
    try:
        parsed = [(int(r[0]), r[1], int(r[2]), int(r[3])) for r in rows]
    except (ValueError, IndexError) as exc:
        raise SemiMarkovError(f"malformed trajectory row: {exc}") from None
    for pos, (n, _, _, _) in enumerate(parsed):
        if n != pos:
            raise SemiMarkovError(f"row {pos + 1}: expected n={pos}, got {n}")
    n0, s0, x0, c0 = parsed[0]
    if x0 != 0 or c0 != 0:
        raise SemiMarkovError("row 0 must have sojourn 0 and cumtime 0")
    horizon = int(meta["horizon"]) if "horizon" in meta else (parsed[-1][3] if parsed else 0)
    return Trajectory(
        states=states,
        initial=states.index(s0),
        jump_states=np.array([states.index(s) for _, s, _, _ in parsed[1:]], dtype=np.int64),
        sojourns=np.array([x for _, _, x, _ in parsed[1:]], dtype=np.int64),
        cumtimes=np.array([c for _, _, _, c in parsed[1:]], dtype=np.int64),
        horizon=horizon,
    )


def save_trajectory(t: Trajectory, path) -> None:
    Path(path).write_text(trajectory_to_csv(t))


def load_trajectory(path, states: StateSpace | None = None) -> Trajectory:
    return trajectory_from_csv(Path(path).read_text(), states)
