"""Coherent tunnelling by adiabatic passage along a chain of double quantum dots."""
__version__ = "0.1.0"

from .chain import (  # noqa: E402
    BasisIndex, ChainConfig, GaussianPulse, HamiltonianFrame, PulseSchedule,
    basis_index, basis_label, basis_labels, build_hamiltonian, make_schedule,
)
from .dynamics import (  # noqa: E402
    DensityMatrix, IntegratorSettings, Trajectory, evolve, rhs, transfer_probability,
)
from .spectral import (  # noqa: E402
    DarkState, SpectrumSample, dark_state, degenerate_triplet, leakage, spectrum_at,
)
from .analysis import (  # noqa: E402
    MiscalibrationSpec, SwapComparisonSpec, SweepAxis, SweepSpec, ctap_vs_swap,
    find_optimal_tmax, miscalibration_curve, perturb_schedule, run_sweep, swap_transfer_time,
)

__all__ = [
    "BasisIndex", "ChainConfig", "GaussianPulse", "HamiltonianFrame", "PulseSchedule",
    "basis_index", "basis_label", "basis_labels", "build_hamiltonian", "make_schedule",
    "DensityMatrix", "IntegratorSettings", "Trajectory", "evolve", "rhs",
    "transfer_probability", "DarkState", "SpectrumSample", "dark_state",
    "degenerate_triplet", "leakage", "spectrum_at", "MiscalibrationSpec",
    "SwapComparisonSpec", "SweepAxis", "SweepSpec", "ctap_vs_swap", "find_optimal_tmax",
    "miscalibration_curve", "perturb_schedule", "run_sweep", "swap_transfer_time",
]
