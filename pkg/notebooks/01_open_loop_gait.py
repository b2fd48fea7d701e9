# %% [markdown]
# # Open-loop gait
#
# Both rotors spin at 455.6 rad/s, half a turn apart. Their horizontal
# forces add along the body x axis and their yaw torques cancel, while the
# vertical components rock the load between the legs. The legs stick while
# lightly loaded and slip while pressed down, and the robot creeps forward.
#
# Run from the repository root: `python notebooks/01_open_loop_gait.py`.
# Plots land in `notebooks/output/`.

# %%
from pathlib import Path

import numpy as np

from vibrobot.harness import SweepSpec, emit_outputs, run_sweep, svg_plot
from vibrobot.params import RobotParams, SimConfig
from vibrobot.sim import Drive, run_open_loop

OUT = Path(__file__).resolve().parent / "output"
OUT.mkdir(exist_ok=True)

# %% [markdown]
# A single two-second run at the default constants. `mode` is 0 while the
# legs are stuck and 1 while they slide.

# %%
trace = run_open_loop(SimConfig(duration=2.0), RobotParams(), Drive.speeds(455.6))
print(f"final X = {trace.final('X') * 1e3:.2f} mm, Y = {trace.final('Y'):.1e} m, "
      f"phi = {trace.final('phi'):.1e} rad")
print(f"fraction of samples sliding: {np.mean(trace['mode']):.2f}")
emit_outputs(trace, OUT / "gait")

# %% [markdown]
# ## Contact stiffness
#
# Stiffer feet shorten the elastic phase of each stick. The forward drift
# changes a little and the sideways motion stays at rounding level.

# %%
k0 = RobotParams().k
k_sweep = run_sweep(SweepSpec("k", (k0 / 10, k0, k0 * 10)))
print(k_sweep.table())

# %% [markdown]
# ## Friction
#
# More friction holds the legs longer in every cycle, so the robot covers
# less ground. With no friction at all the body just oscillates about its
# start, with no sideways or yaw motion.

# %%
mu_sweep = run_sweep(SweepSpec("mu", (0.0, 0.18, 0.36, 0.72)))
print(mu_sweep.table())
emit_outputs(mu_sweep, OUT / "mu_sweep")

series = [(f"mu = {v}", tr["X"]) for v, tr in zip(mu_sweep.spec.values, mu_sweep.traces)]
(OUT / "mu_sweep_overlay.svg").write_text(svg_plot(mu_sweep.traces[0]["t"], series, "t (s)", "X (m)"))
