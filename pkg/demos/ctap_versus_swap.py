# %% [markdown]
# CTAP against a chain of SWAP gates
#
# Times are in units of h / dE_ST with dE_ST = 500 ueV.  The SWAP chain
# grows linearly with N; the CTAP time grows more slowly but is set by
# the tunnelling rate in a different way, so the faster scheme depends on
# omega_max.

# %%
from ctapchain import ChainConfig, IntegratorSettings, SwapComparisonSpec, ctap_vs_swap

settings = IntegratorSettings(steps_per_tmax=10000)
for omega in (100.0, 2000.0, 5000.0):
    spec = SwapComparisonSpec((3, 5, 7), omega_max=omega, delta_e_st=500.0,
                              search_range_pi=(5, 40), resolution_pi=5, tolerance_pi=0.1)
    table = ctap_vs_swap(spec, ChainConfig(3, 1.0), settings)
    print(f"omega_max = {omega:6.0f} ueV   crossover N = {table.crossover_n}")
    for n, tc, ts, f in zip(table.n, table.t_ctap, table.t_swap, table.faster):
        print(f"   N={n}  ctap {tc:9.3f}  swap {ts:9.3f}  -> {f}")
