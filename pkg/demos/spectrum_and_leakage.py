# %% [markdown]
# Instantaneous spectrum of the three-dot chain
#
# Three levels sit at zero throughout the pulse sequence.  How much of the
# state leaves that zero-energy space depends on how slowly the pulses
# are applied.

# %%
import numpy as np

from ctapchain import ChainConfig, evolve, leakage, make_schedule, spectrum_at

config = ChainConfig.from_pi_units(3, 25)
schedule = make_schedule(config)
for t in np.linspace(0, config.t_max, 6):
    s = spectrum_at(schedule, t, 3)
    print(f"t/t_max={t / config.t_max:.1f}  zeros={s.zero_multiplicity}  "
          f"levels={np.round(s.eigenvalues, 3)}")

# %%
for t_pi in (5, 25, 50):
    c = ChainConfig.from_pi_units(3, t_pi)
    traj = evolve(c, samples=401)
    leak = leakage(traj, make_schedule(c))
    print(f"t_max={t_pi:>2} pi: peak leakage {leak.max():.4f}, final {leak[-1]:.2e}, "
          f"rho_ff {traj.rho_ff:.5f}")
