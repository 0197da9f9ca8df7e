"""Simulating one long trajectory and estimating everything from it."""

import numpy as np

from dtsmc import distribution_sequence, estimate_all, reliability_sequence, simulate
from dtsmc.simulate import semi_markov_state, trajectory_to_csv
from _system import system_kernel, working

kernel = system_kernel()
part = working(kernel)

t = simulate(kernel, "ok", M=50, seed=1)
print(trajectory_to_csv(t))
print("states on days 0..15:", [semi_markov_state(t, k) for k in range(16)])

# Same seed, longer window: the estimators get better with M.
K = 12
P_true = distribution_sequence(kernel.q, K)
R_true = reliability_sequence(kernel.q, part.up_index, K)
print(f"\n{'M':>8} {'N(M)':>7} {'sup|q_hat-q|':>13} {'sup|P_hat-P|':>13} {'sup|R_hat-R|':>13}")
for M in (500, 5_000, 50_000):
    b = estimate_all(simulate(kernel, "ok", M, seed=2), K, part)
    L = max(b.kernel.q.shape[0], kernel.q.shape[0])
    pad = lambda a: np.concatenate([a, np.zeros((L - a.shape[0],) + a.shape[1:])])  # noqa: E731
    print(
        f"{M:>8} {b.counts.N:>7} {np.abs(pad(b.kernel.q) - pad(kernel.q)).max():>13.4f}"
        f" {np.abs(b.P - P_true).max():>13.4f} {np.abs(b.R - R_true).max():>13.4f}"
    )
