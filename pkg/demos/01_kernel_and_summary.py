"""Building a semi-Markov kernel and reading off its long-run behaviour."""

import tempfile
from pathlib import Path

import numpy as np

from dtsmc import check_assumptions, embedded_matrix, load_kernel, save_kernel, summarize
from _system import system_kernel

kernel = system_kernel()
print(kernel)
for i, j, k, p in kernel.entries():
    print(f"  q[{i} -> {j}]({k}) = {p}")

# The embedded chain forgets the sojourn times.
print("\nembedded transition matrix:")
print(np.round(embedded_matrix(kernel), 3))

# nu is stationary for the embedded chain, m_bar is the mean sojourn under nu
# and mu_ii = m_bar / nu_i the mean time between two entries into i.
s = summarize(kernel)
print("\nnu     =", np.round(s.nu, 4))
print("m_bar  =", round(s.m_bar, 4))
print("mu_ii  =", np.round(s.mu, 4))

# The limit theorems need an irreducible, aperiodic chain.
rep = check_assumptions(kernel)
print("\nirreducible", rep.irreducible, "| aperiodic", rep.aperiodic, "| checked up to lag", rep.checked_up_to)

# Kernels live in small JSON files, one entry per nonzero q_ij(k).
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "system.json"
    save_kernel(kernel, path)
    print("\n" + path.read_text()[:200] + "...")
    assert np.array_equal(load_kernel(path).q, kernel.q)
