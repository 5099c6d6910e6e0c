"""Density-matrix dynamics under W(t) with pure dephasing.

    d rho / dt = -i [W(t), rho] - gamma * (rho - diag(rho))

The default integrator is classical fixed-step RK4 (compiled, see
``_kernel``) with ``h = t_max / steps_per_tmax``; after every step the state
is replaced by its Hermitian part.  An adaptive Dormand-Prince alternative
is available through :class:`IntegratorSettings`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import _kernel
from .chain import ChainConfig, HamiltonianFrame, basis_index, basis_labels, make_schedule
from .errors import DimensionError, IntegrationError, StateValidityError

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class IntegratorSettings:
    """How :func:`evolve` integrates.

    ``method`` is ``"rk4"`` (fixed step, bit-reproducible) or ``"adaptive"``
    (scipy DOP853 with ``rtol``/``atol``).
    """

    method: str = "rk4"
    steps_per_tmax: int = 50000
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        if self.method not in ("rk4", "adaptive"):
            raise ValueError(f"unknown integrator {self.method!r}")
        if int(self.steps_per_tmax) < 1:
            raise ValueError("steps_per_tmax must be >= 1")
        object.__setattr__(self, "steps_per_tmax", int(self.steps_per_tmax))

    def halved(self):
        return IntegratorSettings(self.method, 2 * self.steps_per_tmax,
                                  self.rtol / 2, self.atol / 2)

    def as_dict(self):
        return asdict(self)


DEFAULT_SETTINGS = IntegratorSettings()


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionError(f"density matrix must be square, got {rho.shape}")
        n = math.isqrt(rho.shape[0])
        if n * n != rho.shape[0]:
            raise DimensionError(f"dimension {rho.shape[0]} is not N^2")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @classmethod
    def basis_state(cls, pair_site, single_site, n_dqd, time=0.0):
        rho = np.zeros((n_dqd * n_dqd,) * 2, dtype=complex)
        i = basis_index(pair_site, single_site, n_dqd)
        rho[i, i] = 1.0
        return cls(rho, time)

    @classmethod
    def pure(cls, vector, time=0.0):
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), time)

    @property
    def n_dqd(self):
        return math.isqrt(self.matrix.shape[0])

    @property
    def populations(self):
        return self.matrix.diagonal().real.copy()

    @property
    def purity(self):
        return float(np.sum(np.abs(self.matrix) ** 2))

    def validate(self):
        """Raise :class:`StateValidityError` unless rho is a physical state."""
        rho = self.matrix
        if not np.all(np.isfinite(rho)):
            raise StateValidityError("density matrix has non-finite entries", self.time)
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITICITY_TOL:
            raise StateValidityError(f"Hermiticity violated by {herm:.3e}", self.time)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise StateValidityError(f"trace is {tr!r}", self.time)
        lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
        if lam < -POSITIVITY_TOL:
            raise StateValidityError(f"smallest eigenvalue {lam:.3e}", self.time)
        return self


@dataclass
class Trajectory:
    """Sampled solution of the master equation.

    ``populations[s]`` holds the diagonal of rho at ``times[s]`` in basis
    order.  ``snapshots`` keeps the full matrix at ``snapshot_times``.
    """

    n_dqd: int
    times: np.ndarray
    populations: np.ndarray
    traces: np.ndarray
    purities: np.ndarray
    snapshot_times: np.ndarray
    snapshots: np.ndarray | None
    final_state: DensityMatrix
    hermiticity_drift: float
    max_trace_deviation: float
    min_eigenvalue: float
    n_steps: int
    step: float
    settings: IntegratorSettings

    @property
    def full_states(self):
        if self.snapshots is None:
            return []
        return [DensityMatrix(r, t) for r, t in zip(self.snapshots, self.snapshot_times)]

    def population(self, pair_site, single_site):
        return self.populations[:, basis_index(pair_site, single_site, self.n_dqd)]

    @property
    def rho_ff(self):
        """Final population of |P_N S_N>."""
        return float(self.final_state.matrix[-1, -1].real)

    def to_csv(self, path):
        header = ["t"] + basis_labels(self.n_dqd) + ["trace", "purity"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for t, pops, tr, pur in zip(self.times, self.populations, self.traces, self.purities):
                writer.writerow([fmt(t)] + [fmt(p) for p in pops] + [fmt(tr), fmt(pur)])


def fmt(x):
    """17 significant digits, enough to round-trip a double."""
    return format(float(x), ".17g")


def rhs(rho, w, gamma):
    """Time derivative of rho for a fixed Hamiltonian frame (dense numpy)."""
    r = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    h = w.matrix if isinstance(w, HamiltonianFrame) else np.asarray(w)
    if r.shape != h.shape:
        raise DimensionError(f"rho {r.shape} and W {h.shape} differ")
    comm = h @ r - r @ h
    dephase = r - np.diag(np.diag(r))
    return -1j * comm - gamma * dephase


def initial_state(n_dqd):
    """All three electrons in the first double dot."""
    return DensityMatrix.basis_state(1, 1, n_dqd)


def _step_grid(config, settings, samples):
    nominal = max(1, math.ceil(settings.steps_per_tmax * (1.0 + config.margin_ratio) - 1e-9))
    intervals = max(1, samples - 1)
    stride = math.ceil(nominal / intervals)
    n_steps = stride * intervals
    return n_steps, stride, config.t_end / n_steps


def evolve(config, schedule=None, rho0=None, settings=None, samples=2000,
           snapshot_every=None, validate=True):
    """Integrate from ``t = 0`` to ``config.t_end``.

    Parameters
    ----------
    config : ChainConfig
    schedule : PulseSchedule, optional
        Defaults to ``make_schedule(config)``.
    rho0 : DensityMatrix, optional
        Defaults to |P1S1><P1S1|.
    settings : IntegratorSettings, optional
    samples : int
        Number of evenly spaced output times, endpoints included.
    snapshot_every : int, optional
        Keep the full matrix every this many samples (the last sample is
        always kept).  Defaults to about 100 snapshots.
    validate : bool
        Check trace, Hermiticity and positivity and raise
        :class:`StateValidityError` on violation.

    Returns
    -------
    Trajectory
    """
    if not isinstance(config, ChainConfig):
        raise TypeError("config must be a ChainConfig")
    schedule = make_schedule(config) if schedule is None else schedule
    settings = DEFAULT_SETTINGS if settings is None else settings
    rho0 = initial_state(config.n_dqd) if rho0 is None else rho0
    if schedule.n_dqd != config.n_dqd:
        raise DimensionError(f"schedule is for N={schedule.n_dqd}, config has N={config.n_dqd}")
    if rho0.matrix.shape[0] != config.dim:
        raise DimensionError(f"rho0 has dimension {rho0.matrix.shape[0]}, expected {config.dim}")
    samples = max(2, int(samples))
    if snapshot_every is None:
        snapshot_every = max(1, math.ceil((samples - 1) / 100))

    n_steps, stride, h = _step_grid(config, settings, samples)
    flags = np.zeros(samples, dtype=np.bool_)
    flags[::snapshot_every] = True
    flags[-1] = True

    if settings.method == "rk4":
        out = _run_rk4(config, schedule, rho0, n_steps, stride, h, flags)
    else:
        out = _run_adaptive(config, schedule, rho0, samples, flags, settings)
    pops, traces, purities, snaps, final, drift, trace_dev = out

    times = np.linspace(0.0, config.t_end, samples)
    if settings.method == "rk4":
        times = np.arange(samples) * (stride * h)
    snap_times = times[flags]
    traj = Trajectory(
        n_dqd=config.n_dqd, times=times, populations=pops, traces=traces,
        purities=purities, snapshot_times=snap_times, snapshots=snaps,
        final_state=DensityMatrix(final, float(times[-1])),
        hermiticity_drift=float(drift), max_trace_deviation=float(trace_dev),
        min_eigenvalue=float(min(np.linalg.eigvalsh(r)[0] for r in snaps)),
        n_steps=n_steps if settings.method == "rk4" else 0,
        step=h if settings.method == "rk4" else float("nan"), settings=settings)
    if validate:
        _check(traj)
    return traj


def _run_rk4(config, schedule, rho0, n_steps, stride, h, flags):
    amp, cen, std = schedule.parameters()
    rho = rho0.matrix
    x0 = np.ascontiguousarray(0.5 * (rho + rho.conj().T).real)
    y0 = np.ascontiguousarray(0.5 * (rho + rho.conj().T).imag)
    (pops, traces, purities, sx, sy, xf, yf, drift, trace_dev, status,
     fail_time) = _kernel.rk4_propagate(x0, y0, config.n_dqd, config.gamma, amp, cen,
                                        std, 0.0, h, n_steps, stride, flags)
    if status != _kernel.OK:
        raise IntegrationError("non-finite state during RK4 integration", float(fail_time))
    return pops, traces, purities, sx + 1j * sy, xf + 1j * yf, drift, trace_dev


def _run_adaptive(config, schedule, rho0, samples, flags, settings):
    n, m = config.n_dqd, config.dim
    amp, cen, std = schedule.parameters()
    w = np.empty(n - 1)

    def f(t, v):
        _kernel._rates(t, amp, cen, std, w)
        dx, dy = _kernel.derivative(v[:m * m].reshape(m, m), v[m * m:].reshape(m, m),
                                    n, config.gamma, w)
        return np.concatenate((dx.ravel(), dy.ravel()))

    rho = rho0.matrix
    v0 = np.concatenate((rho.real.ravel(), rho.imag.ravel()))
    times = np.linspace(0.0, config.t_end, samples)
    sol = solve_ivp(f, (0.0, config.t_end), v0, method="DOP853", t_eval=times,
                    rtol=settings.rtol, atol=settings.atol)
    if not sol.success or not np.all(np.isfinite(sol.y)):
        t_fail = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"adaptive integration failed: {sol.message}", t_fail)
    states = (sol.y[:m * m].T + 1j * sol.y[m * m:].T).reshape(-1, m, m)
    drift = float(np.max(np.abs(states - states.conj().transpose(0, 2, 1))))
    states = 0.5 * (states + states.conj().transpose(0, 2, 1))
    traces = np.einsum("sii->s", states).real
    pops = np.einsum("sii->si", states).real
    purities = np.sum(np.abs(states) ** 2, axis=(1, 2))
    trace_dev = float(np.max(np.abs(traces - 1.0)))
    return pops, traces, purities, states[flags], states[-1], drift, trace_dev


def _check(traj):
    if traj.hermiticity_drift > HERMITICITY_TOL:
        raise StateValidityError(f"Hermiticity drift {traj.hermiticity_drift:.3e}")
    if traj.max_trace_deviation > TRACE_TOL:
        raise StateValidityError(f"trace drifted by {traj.max_trace_deviation:.3e}")
    if traj.min_eigenvalue < -POSITIVITY_TOL:
        raise StateValidityError(f"negative eigenvalue {traj.min_eigenvalue:.3e} at a snapshot")
    if np.any(traj.populations < -POSITIVITY_TOL):
        s = int(np.argmax(np.any(traj.populations < -POSITIVITY_TOL, axis=1)))
        raise StateValidityError("negative population", float(traj.times[s]))


def transfer_probability(config, schedule=None, settings=None):
    """Final population of |P_N S_N> starting from |P_1 S_1>."""
    traj = evolve(config, schedule, settings=settings, samples=2, snapshot_every=1)
    return traj.rho_ff


def step_halving_check(config, schedule=None, settings=None):
    """Change of the final rho_ff when the step size is halved."""
    settings = DEFAULT_SETTINGS if settings is None else settings
    coarse = transfer_probability(config, schedule, settings)
    fine = transfer_probability(config, schedule, settings.halved())
    return abs(fine - coarse)
