"""Parameter sweeps, optimum search, miscalibration and CTAP-vs-SWAP timing.

Every grid point is an independent call to
:func:`~ctapchain.dynamics.transfer_probability`; results are merged by
grid index so they do not depend on evaluation order or worker count.
"""
from __future__ import annotations

import csv
import functools
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .chain import ChainConfig, make_schedule
from .dynamics import DEFAULT_SETTINGS, fmt, transfer_probability
from .errors import CTAPError, ConfigurationError, TargetUnavailableError

SWEEP_PARAMETERS = ("t_max", "gamma", "omega_max", "n_dqd")
OBSERVABLES = ("transfer_probability", "infidelity_delta")


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.name not in SWEEP_PARAMETERS:
            raise ConfigurationError(f"cannot sweep {self.name!r}; choose from {SWEEP_PARAMETERS}")
        if int(self.count) < 2:
            raise ConfigurationError(f"axis {self.name} needs count >= 2")
        if self.spacing not in ("linear", "log"):
            raise ConfigurationError(f"unknown spacing {self.spacing!r}")
        lo = min(self.start, self.stop)
        if self.name == "gamma" and lo < 0:
            raise ConfigurationError("gamma axis must be >= 0")
        if self.name != "gamma" and lo <= 0:
            raise ConfigurationError(f"{self.name} axis must be positive")
        if self.spacing == "log" and lo <= 0:
            raise ConfigurationError("log spacing needs a positive range")
        if self.name == "n_dqd":
            vals = self.values()
            if np.any(vals % 2 == 0):
                raise ConfigurationError(f"n_dqd axis values must be odd, got {vals.tolist()}")

    def values(self):
        if self.spacing == "log":
            v = np.geomspace(self.start, self.stop, int(self.count))
        else:
            v = np.linspace(self.start, self.stop, int(self.count))
        if self.name == "n_dqd":
            return np.rint(v).astype(int)
        return v


@dataclass(frozen=True)
class SweepSpec:
    base_config: ChainConfig
    axes: tuple
    observable: str = "transfer_probability"
    settings: object = None

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not 1 <= len(self.axes) <= 3:
            raise ConfigurationError("a sweep needs 1 to 3 axes")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate sweep axes {names}")
        if self.observable not in OBSERVABLES:
            raise ConfigurationError(f"unknown observable {self.observable!r}")


@dataclass
class SweepResult:
    """Gridded observable values; ``values[i, j, ...]`` matches ``coordinates``.

    Failed points hold NaN, ``status`` ``"error"`` and a message in ``errors``.
    """

    names: tuple
    coordinates: list
    values: np.ndarray
    status: np.ndarray
    errors: dict
    observable: str
    provenance: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.errors

    def rows(self):
        for idx in itertools.product(*(range(len(c)) for c in self.coordinates)):
            coords = [c[i] for c, i in zip(self.coordinates, idx)]
            yield idx, coords, self.values[idx], self.status[idx]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(self.names) + [self.observable, "status"])
            for _, coords, value, status in self.rows():
                cells = [str(c) if isinstance(c, (int, np.integer)) else fmt(c) for c in coords]
                writer.writerow(cells + [fmt(value) if status == "ok" else "", status])


def _point_config(base, names, coords):
    changes = {}
    for name, value in zip(names, coords):
        changes[name] = int(value) if name == "n_dqd" else float(value)
    return replace(base, **changes)


def _evaluate(task):
    index, config_or_error, observable, settings = task
    if isinstance(config_or_error, str):
        return index, math.nan, config_or_error
    try:
        rho = transfer_probability(config_or_error, settings=settings)
    except CTAPError as exc:
        return index, math.nan, f"{type(exc).__name__}: {exc}"
    value = rho if observable == "transfer_probability" else 1.0 - rho
    return index, value, None


def _map(tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [_evaluate(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate, tasks))


def run_sweep(spec, workers=1, order=None):
    """Evaluate ``spec.observable`` on the full grid of ``spec.axes``.

    ``order`` optionally permutes the evaluation order of the flattened
    grid; the result is the same for any order and any ``workers``.
    """
    settings = spec.settings or DEFAULT_SETTINGS
    names = tuple(a.name for a in spec.axes)
    coords = [a.values() for a in spec.axes]
    shape = tuple(len(c) for c in coords)
    grid = list(itertools.product(*(range(s) for s in shape)))
    if order is not None:
        order = list(order)
        if sorted(order) != list(range(len(grid))):
            raise ValueError("order must be a permutation of the grid indices")
        grid = [grid[k] for k in order]

    tasks = []
    for idx in grid:
        point = [c[i] for c, i in zip(coords, idx)]
        try:
            cfg = _point_config(spec.base_config, names, point)
        except ConfigurationError as exc:
            cfg = f"ConfigurationError: {exc}"
        tasks.append((idx, cfg, spec.observable, settings))

    values = np.full(shape, np.nan)
    status = np.full(shape, "ok", dtype=object)
    errors = {}
    for idx, value, err in _map(tasks, workers):
        values[idx] = value
        if err is not None:
            status[idx] = "error"
            errors[idx] = err

    provenance = {
        "tool_version": __version__,
        "seedless": True,
        "observable": spec.observable,
        "base_config": spec.base_config.as_dict(),
        "schedule": make_schedule(spec.base_config).descriptor(),
        "integrator": settings.as_dict(),
        "axes": [{"name": a.name, "start": a.start, "stop": a.stop,
                  "count": int(a.count), "spacing": a.spacing} for a in spec.axes],
    }
    return SweepResult(names, coords, values, status, errors, spec.observable, provenance)


@dataclass(frozen=True)
class OptimalTmax:
    t_max: float
    rho_ff: float
    scan_t_max: np.ndarray = field(repr=False)
    scan_rho_ff: np.ndarray = field(repr=False)


def _tmax_grid(search_range, resolution):
    lo, hi = map(float, search_range)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo <= 0 or hi <= lo:
        raise ValueError(f"invalid t_max search range {search_range!r}")
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    count = int(math.floor((hi - lo) / resolution + 1e-9)) + 1
    return lo + resolution * np.arange(count)


def _scan(config, grid, settings, workers):
    tasks = [((k,), replace(config, t_max=float(t)), "transfer_probability", settings)
             for k, t in enumerate(grid)]
    out = np.full(len(grid), np.nan)
    for (k,), value, _ in _map(tasks, workers):
        out[k] = value
    return out


def find_optimal_tmax(config, search_range, resolution, settings=None, workers=1):
    """Pulse time that maximises rho_ff, with quadratic refinement.

    ``search_range`` and ``resolution`` are in the same time units as
    ``config.t_max``.  With ``gamma == 0`` the transfer saturates; the
    smallest grid time within 1e-4 of the best value is returned instead.
    """
    settings = settings or DEFAULT_SETTINGS
    grid = _tmax_grid(search_range, resolution)
    values = _scan(config, grid, settings, workers)
    if np.all(np.isnan(values)):
        raise CTAPError("every point of the t_max scan failed")
    best = int(np.nanargmax(values))

    if config.gamma == 0:
        top = values[best]
        k = int(np.flatnonzero(values >= top - 1e-4)[0])
        return OptimalTmax(float(grid[k]), float(values[k]), grid, values)

    if 0 < best < len(grid) - 1 and np.all(np.isfinite(values[best - 1:best + 2])):
        y0, y1, y2 = values[best - 1:best + 2]
        curv = y0 - 2.0 * y1 + y2
        if curv < 0:
            shift = 0.5 * (y0 - y2) / curv
            t_star = grid[best] + float(np.clip(shift, -1.0, 1.0)) * resolution
            try:
                rho_star = transfer_probability(replace(config, t_max=t_star), settings=settings)
            except CTAPError:
                rho_star = -math.inf
            if rho_star >= values[best]:
                return OptimalTmax(float(t_star), float(rho_star), grid, values)
    return OptimalTmax(float(grid[best]), float(values[best]), grid, values)


def minimal_tmax(config, threshold, search_range, resolution, tol, settings=None):
    """Smallest scanned ``t_max`` whose rho_ff reaches ``threshold``.

    The first grid crossing is refined by bisection to ``tol``.  Returns
    None when the threshold is never reached in the range.
    """
    settings = settings or DEFAULT_SETTINGS
    grid = _tmax_grid(search_range, resolution)

    def rho(t):
        return transfer_probability(replace(config, t_max=float(t)), settings=settings)

    prev = None
    for t in grid:
        if rho(t) >= threshold:
            if prev is None:
                return float(t)
            lo, hi = prev, float(t)
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if rho(mid) >= threshold:
                    hi = mid
                else:
                    lo = mid
            return hi
        prev = float(t)
    return None


MISCALIBRATION_TARGETS = {"omega_i": "initial", "omega_interior": "interior", "omega_f": "final"}


@dataclass(frozen=True)
class MiscalibrationSpec:
    """Relative error on one pulse family.

    ``kind="amplitude"`` scales the peak rate by ``1 + fraction``;
    ``kind="peak_time"`` moves the peak to ``(1 + fraction) * peak_time``.
    """

    target: str
    kind: str
    fraction: float

    def __post_init__(self):
        if self.target not in MISCALIBRATION_TARGETS:
            raise ConfigurationError(f"unknown target {self.target!r}")
        if self.kind not in ("amplitude", "peak_time"):
            raise ConfigurationError(f"unknown miscalibration kind {self.kind!r}")


def perturb_schedule(schedule, spec):
    family = MISCALIBRATION_TARGETS[spec.target]
    links = schedule.links_of(family)
    if not links:
        raise TargetUnavailableError(
            f"{spec.target} does not exist for N={schedule.n_dqd}")
    pulses = list(schedule.pulses)
    for k in links:
        p = pulses[k]
        if spec.kind == "amplitude":
            pulses[k] = replace(p, amplitude=p.amplitude * (1.0 + spec.fraction))
        else:
            pulses[k] = replace(p, peak_time=p.peak_time * (1.0 + spec.fraction))
    return replace(schedule, pulses=tuple(pulses))


@dataclass
class MiscalibrationCurve:
    t_max: np.ndarray
    delta: np.ndarray
    rho_ideal: np.ndarray
    rho_perturbed: np.ndarray
    errors: dict = field(default_factory=dict)


def miscalibration_curve(config, spec, t_max_values, settings=None):
    """``|rho_ff - rho_ideal|`` against ``t_max`` for one miscalibration."""
    t_max_values = np.asarray(t_max_values, dtype=float)
    ideal = np.full(t_max_values.shape, np.nan)
    perturbed = np.full(t_max_values.shape, np.nan)
    errors = {}
    for k, t in enumerate(t_max_values):
        cfg = replace(config, t_max=float(t))
        schedule = make_schedule(cfg)
        try:
            ideal[k] = transfer_probability(cfg, schedule, settings)
            perturbed[k] = transfer_probability(cfg, perturb_schedule(schedule, spec), settings)
        except TargetUnavailableError:
            raise
        except CTAPError as exc:
            errors[k] = f"{type(exc).__name__}: {exc}"
    return MiscalibrationCurve(t_max_values, np.abs(perturbed - ideal), ideal, perturbed, errors)


@dataclass(frozen=True)
class SwapComparisonSpec:
    """CTAP versus successive-SWAP transfer time.

    ``omega_max`` and ``delta_e_st`` share one energy unit.  Reported times
    are in units of ``h / delta_e_st``.  The CTAP time is the smallest
    ``t_max`` (scanned in units of pi/omega_max) that reaches
    ``ctap_threshold`` at zero dephasing.
    """

    n_values: tuple
    omega_max: float
    delta_e_st: float
    t_swap_units: float = 11.254
    ctap_threshold: float = 0.99
    search_range_pi: tuple = (1.0, 100.0)
    resolution_pi: float = 2.5
    tolerance_pi: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        for n in self.n_values:
            if n < 3 or n % 2 == 0:
                raise ConfigurationError(f"chain lengths must be odd and >= 3, got {n}")
        if self.omega_max <= 0 or self.delta_e_st <= 0 or self.t_swap_units <= 0:
            raise ConfigurationError("energies and t_swap_units must be positive")
        if not 0.5 < self.ctap_threshold < 1.0:
            raise ConfigurationError("ctap_threshold must lie in (0.5, 1)")


def swap_transfer_time(spec, n):
    """``(n - 1) t_SWAP h dE_ST / omega_max^2`` in units of ``h / dE_ST``.

    The SWAP sequence takes ``t_swap_units`` in ``h / J`` with the exchange
    ``J = omega_max^2 / dE_ST``.
    """
    if isinstance(n, bool) or int(n) != n or n < 3 or n % 2 == 0:
        raise ValueError(f"n must be an odd integer >= 3, got {n!r}")
    return (int(n) - 1) * spec.t_swap_units * (spec.delta_e_st / spec.omega_max) ** 2


@functools.lru_cache(maxsize=None)
def ctap_threshold_tmax_pi(n, threshold, search_range_pi, resolution_pi, tolerance_pi,
                           omega_s_ratio=10.0, sigma_ratio=0.125, margin_ratio=0.1,
                           settings=DEFAULT_SETTINGS):
    """Minimal ``t_max`` (in pi/omega_max) reaching ``threshold`` at zero dephasing."""
    cfg = ChainConfig(n_dqd=n, t_max=math.pi, omega_max=1.0, omega_s_ratio=omega_s_ratio,
                      sigma_ratio=sigma_ratio, gamma=0.0, margin_ratio=margin_ratio)
    lo, hi = search_range_pi
    t = minimal_tmax(cfg, threshold, (lo * math.pi, hi * math.pi), resolution_pi * math.pi,
                     tolerance_pi * math.pi, settings)
    return None if t is None else t / math.pi


def ctap_transfer_time(spec, n, config_template, settings=None):
    """CTAP time for chain length ``n`` in units of ``h / dE_ST`` (None if unreachable).

    ``t_max = x pi / omega_max`` with omega_max an angular rate (hbar = 1)
    equals ``x / 2 * h / omega_max``.
    """
    x = ctap_threshold_tmax_pi(
        int(n), spec.ctap_threshold, tuple(spec.search_range_pi), spec.resolution_pi,
        spec.tolerance_pi, config_template.omega_s_ratio, config_template.sigma_ratio,
        config_template.margin_ratio, settings or DEFAULT_SETTINGS)
    if x is None:
        return None
    return 0.5 * x * spec.delta_e_st / spec.omega_max


@dataclass
class ComparisonTable:
    n: list
    t_ctap: list
    t_swap: list
    faster: list
    crossover_n: int | None
    omega_max: float
    delta_e_st: float

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["N", "t_ctap", "t_swap", "faster"])
            for n, tc, ts, f in zip(self.n, self.t_ctap, self.t_swap, self.faster):
                writer.writerow([n, "" if tc is None else fmt(tc), fmt(ts), f])


def ctap_vs_swap(spec, config_template, settings=None):
    """Transfer time of both schemes for every chain length in ``spec.n_values``."""
    ns, tc, ts, faster = [], [], [], []
    for n in spec.n_values:
        t_ctap = ctap_transfer_time(spec, n, config_template, settings)
        t_swap = swap_transfer_time(spec, n)
        if t_ctap is None:
            f = "unreachable"
        elif t_ctap < t_swap:
            f = "ctap"
        elif t_swap < t_ctap:
            f = "swap"
        else:
            f = "tie"
        ns.append(n)
        tc.append(t_ctap)
        ts.append(t_swap)
        faster.append(f)
    crossover = None
    decided = [(n, f) for n, f in zip(ns, faster) if f in ("ctap", "swap")]
    for (_, f0), (n1, f1) in zip(decided, decided[1:]):
        if f1 != f0:
            crossover = n1
            break
    return ComparisonTable(ns, tc, ts, faster, crossover, spec.omega_max, spec.delta_e_st)
