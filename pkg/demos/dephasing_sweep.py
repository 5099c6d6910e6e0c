# %% [markdown]
# Dephasing against pulse time
#
# A coarse version of the t_max / Gamma map for N = 3 with omega_max = 10.
# Larger t_max helps adiabaticity but exposes the coherences to
# dephasing for longer.

# %%
import math

import numpy as np

from ctapchain import ChainConfig, IntegratorSettings, SweepAxis, SweepSpec, run_sweep

unit = math.pi / 10                                # pi / omega_max
spec = SweepSpec(
    ChainConfig(3, 25 * unit, omega_max=10.0),
    [SweepAxis("gamma", 0.0, 0.08, 5), SweepAxis("t_max", 10 * unit, 40 * unit, 7)],
    settings=IntegratorSettings(steps_per_tmax=10000),
)
result = run_sweep(spec)

# %%
t_axis = result.coordinates[1] / unit
print("gamma \\ t_max[pi/omega] " + " ".join(f"{t:6.0f}" for t in t_axis))
for g, row in zip(result.coordinates[0], result.values):
    print(f"{g:22.2f} " + " ".join(f"{v:6.3f}" for v in row))

# %%
result.to_csv("dephasing_sweep.csv")
print("points above 0.9:", int(np.sum(result.values > 0.9)), "of", result.values.size)
