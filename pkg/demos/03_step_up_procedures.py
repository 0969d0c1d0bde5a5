"""
Step-up procedures side by side
===============================

Twenty p-values, five of them genuinely small. The plain linear step-up
works at level q; the two-step and adaptive variants first estimate how many
hypotheses look null and then rerun the step-up at an inflated level, buying
extra rejections while keeping the false discovery rate at q.
"""

import numpy as np

from cusumfdr import M0Estimator, adaptive_step_up, bh, estimate_m0, two_step

rng = np.random.default_rng(5)
n, q = 20, 0.05
p = np.concatenate([rng.uniform(0, 0.004, size=5), rng.uniform(0, 1, size=n - 5)])

r_bh = bh(p, q)
r_ts = two_step(p, q)
r_ad = adaptive_step_up(p, q)

m0_plug = estimate_m0(p, M0Estimator.plug_in(0.5))
m0_stage1 = estimate_m0(p, M0Estimator.two_step_stage1(q))
print(f"N = {n}, target level q = {q}")
print(f"plug-in m0 estimate (lambda=0.5): {m0_plug}")
print(f"stage-1 m0 estimate:              {m0_stage1}")
print()
header = f"{'procedure':<12} {'k':>3} {'level used':>12}  rejected"
print(header)
print("-" * len(header))
for name, r in [("bh", r_bh), ("two-step", r_ts), ("adaptive", r_ad)]:
    print(f"{name:<12} {r.k:>3} {r.level_used:>12.6f}  {sorted(r.rejected)}")

print()
print("sorted p-values against the bh thresholds i/N * q:")
order = np.argsort(p)
for i, idx in enumerate(order[:8], start=1):
    thr = i / n * q
    mark = "reject" if idx in r_bh.rejected else ""
    print(f"  P_({i}) = {p[idx]:.5f}  vs  {thr:.5f}  {mark}")
