"""Markov renewal function, state distribution and reliability at the true kernel."""

import numpy as np

from dtsmc import distribution_sequence, markov_renewal_function, reliability_sequence
from _system import system_kernel, working

kernel = system_kernel()
K = 20

# psi_ij(k): expected number of entries into j at time k, starting from i.
psi = markov_renewal_function(kernel.q, K)
print("expected entries into 'failed' by day 20, from 'ok':", round(psi[:, 0, 2].sum(), 3))

# P_ij(k) = P_i(Z_k = j); rows sum to one at every k.
P = distribution_sequence(kernel.q, K, psi=psi)
print("\nP_ok(Z_k = .) for the first days:")
for k in range(6):
    print(f"  k={k:2d}", np.round(P[k, 0], 4))
print("  ...")
print(f"  k={K:2d}", np.round(P[K, 0], 4), "(close to the limiting availability)")
assert np.allclose(P.sum(axis=2), 1.0)

# R_i(k) = P_i(no failure up to k), with U = {ok, degraded}.
part = working(kernel)
R = reliability_sequence(kernel.q, part.up_index, K)
print("\nreliability from 'ok':", np.round(R[:8, 0], 4))
print("mean time to first failure from 'ok' (truncated at K):", round(R[:, 0].sum(), 3))
