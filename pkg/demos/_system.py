"""The three-state repairable system used by every demo.

``ok`` degrades or fails, ``degraded`` is repaired or fails, ``failed`` is
always repaired back to ``ok``.  Sojourns are measured in days.
"""

from dtsmc import PartitionUD, SemiMarkovKernel

ENTRIES = [
    ("ok", "degraded", 2, 0.30),
    ("ok", "degraded", 3, 0.40),
    ("ok", "failed", 1, 0.10),
    ("ok", "failed", 4, 0.20),
    ("degraded", "ok", 1, 0.50),
    ("degraded", "failed", 1, 0.25),
    ("degraded", "failed", 2, 0.25),
    ("failed", "ok", 1, 0.60),
    ("failed", "ok", 2, 0.40),
]


def system_kernel() -> SemiMarkovKernel:
    return SemiMarkovKernel.from_entries(("ok", "degraded", "failed"), 4, ENTRIES)


def working(kernel: SemiMarkovKernel) -> PartitionUD:
    return PartitionUD(kernel.states, ("ok", "degraded"))
