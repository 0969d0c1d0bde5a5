"""
Monitoring many streams with pointwise FDR control
==================================================

Twenty streams, three of which drift out of control at different times. At
every time step each chart value is converted to a p-value under the exact
in-control law, and a step-up procedure picks the streams to flag. Instead of
a fixed chart threshold, the effective threshold adapts to how many streams
look suspicious at once.
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from cusumfdr import ChartConfig, InControlModel, StreamSpec, run, signal_periods

rng = np.random.default_rng(12)
n, T = 20, 80
drifting = {3: 20, 11: 40, 17: 55}  # stream -> time the shift starts

z = rng.standard_normal((n, T)) - 0.5
for i, start in drifting.items():
    z[i, start - 1:] += 1.0  # shift the increment mean from -1/2 to +1/2

config = ChartConfig.bounded(h=10.0, n_states=100)
model = InControlModel.gaussian(mean=-0.5)
specs = [StreamSpec(id=i, config=config, model=model) for i in range(n)]

decisions = run(specs, z, procedure="two-step", q_star=0.05)

print("stream  shift-start  flagged periods")
for i in sorted(drifting) + [0]:
    periods = signal_periods(decisions, i)
    start = drifting.get(i, "-")
    print(f"{i:>6}  {start!s:>11}  {periods}")

n_flagged = [len(d.rejected_ids) for d in decisions]
chart = {i: [r.chart_value for d in decisions for r in d.records if r.stream_id == i]
         for i in drifting}

fig, axes = plt.subplots(2, 1, figsize=(9, 5), sharex=True)
for i, start in drifting.items():
    axes[0].plot(range(1, T + 1), chart[i], label=f"stream {i} (shift at {start})")
axes[0].set_ylabel("chart value")
axes[0].legend(fontsize=8)
axes[1].step(range(1, T + 1), n_flagged, where="mid")
axes[1].set_ylabel("# streams flagged")
axes[1].set_xlabel("time")
fig.tight_layout()
fig.savefig("monitoring_streams.png", dpi=150)
print("wrote monitoring_streams.png")
