"""Asymptotic variances and plug-in confidence intervals."""

from dtsmc import (
    V_P,
    V_R,
    V_q,
    confidence_interval,
    estimate_all,
    plug_in,
    reliability_sequence,
    simulate,
    summarize,
    v_P_1d,
    v_R_1d,
)
from _system import system_kernel, working

kernel = system_kernel()
part = working(kernel)
s = summarize(kernel)
K = 8

# sqrt(M) (q_hat - q) is asymptotically normal; within a row the entries are
# negatively correlated, across rows independent.
Vq = V_q(kernel, s)
e1, e2 = ("ok", "degraded", 3), ("ok", "failed", 4)
print("V_q", e1, "=", round(Vq.variance(e1), 4), "  cov with", e2, "=", round(Vq[e1, e2], 4))

# The full table and the scalar formula are computed independently.
VP = V_P(kernel, s, K)
VR = V_R(kernel, s, part, K)
for k in (1, 3, 6):
    print(
        f"k={k}: V_P(ok,failed) {VP.variance(('ok', 'failed', k)):.6f} / {v_P_1d(kernel, s, 'ok', 'failed', k):.6f}"
        f"   V_R(ok) {VR.variance(('ok', k)):.6f} / {v_R_1d(kernel, s, part, 'ok', k):.6f}"
    )

# Plug-in: evaluate the same table at q_hat with mu replaced by M / N_i(M).
M = 20_000
b = estimate_all(simulate(kernel, "ok", M, seed=3), K, part)
VR_hat = plug_in("R", b.kernel, K, part)
print(f"\n95% intervals for R_ok(k) from one path of length {M}:")
R_true = reliability_sequence(kernel.q, part.up_index, K)
for k in range(1, 6):
    lo, hi = confidence_interval(b.R[k, 0], VR_hat.variance(("ok", k)), M, 0.95)
    print(f"  k={k}: [{lo:.4f}, {hi:.4f}]  truth {R_true[k, 0]:.4f}")
