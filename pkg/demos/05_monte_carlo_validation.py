"""Checking the limit theorems by simulation."""

import os

from dtsmc import ExperimentConfig, run_clt_experiment, run_consistency_sweep
from _system import system_kernel, working

kernel = system_kernel()
part = working(kernel)

cfg = ExperimentConfig(
    kernel=kernel,
    i0="ok",
    M=3000,
    replications=1500,
    K=6,
    coordinates={
        "q": [("ok", "degraded", 3), ("ok", "failed", 4)],
        "P": [("ok", "failed", 3), ("degraded", "ok", 5)],
        "R": [("ok", 2), ("degraded", 4)],
    },
    master_seed=11,
    partition=part,
    level=0.95,
    threads=min(4, os.cpu_count() or 1),
)
# The default tolerances are sized for about 2000 replications; with fewer,
# an occasional check can fail on sampling noise alone.
report = run_clt_experiment(cfg)
print(f"{report.replications} replications, {report.dropped} dropped")
for name, t in report.targets.items():
    print(f"\n[{name}] coordinates {t.coordinates}")
    print("  empirical var  ", [round(float(v), 4) for v in t.empirical_cov.diagonal()])
    print("  theoretical var", [round(float(v), 4) for v in t.theoretical_cov.diagonal()])
    print("  skewness       ", [round(float(v), 3) for v in t.skewness])
    print("  95% coverage   ", [round(float(v), 3) for v in t.coverage])
    print("  checks         ", t.checks)

# Consistency: the median sup-error over paths shrinks as M grows.
sweep = run_consistency_sweep(kernel, "ok", [500, 5_000, 50_000], 6, part, seeds=10)
print()
for target, med in sweep.medians.items():
    print(f"{target:>3}: median sup-error", [round(m, 4) for m in med], "decreasing:", sweep.decreasing(target))
