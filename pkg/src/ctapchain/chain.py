"""Chain configuration, position basis, Gaussian pulse schedule and W(t).

Three electrons sit in a chain of ``N`` double quantum dots.  Their position
is described by the site ``a`` of the doubly occupied dot (the pair, ``P``)
and the site ``b`` of the singly occupied dot (``S``).  Basis states are
ordered pair-major::

    |P1S1>, |P1S2>, ..., |P1SN>, |P2S1>, ..., |PNSN>

so that ``flat_index = (a - 1) * N + (b - 1)``.

Units
-----
Rates (``omega_max``, ``gamma``) and times (``t_max``) share one reference
scale with hbar = 1.  With the default ``omega_max = 1`` a time of
``25 * pi`` reads as ``25 pi / omega_max``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DimensionError

FAMILIES = ("initial", "interior", "final")


@dataclass(frozen=True)
class ChainConfig:
    """Complete definition of one transfer experiment.

    Parameters
    ----------
    n_dqd : int
        Number of double quantum dots, odd and at least 3.
    t_max : float
        Total pulse time.
    omega_max : float
        Peak tunnelling rate of the two external pulses.
    omega_s_ratio : float
        Peak rate of the interior pulses relative to ``omega_max``.
    sigma_ratio : float
        Standard deviation of the external pulses relative to ``t_max``.
    gamma : float
        Pure dephasing rate.
    margin_ratio : float
        Integration continues until ``t_max * (1 + margin_ratio)``.
    """

    n_dqd: int
    t_max: float
    omega_max: float = 1.0
    omega_s_ratio: float = 10.0
    sigma_ratio: float = 0.125
    gamma: float = 0.0
    margin_ratio: float = 0.1

    def __post_init__(self):
        n = self.n_dqd
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            if isinstance(n, float) and n.is_integer():
                object.__setattr__(self, "n_dqd", int(n))
            else:
                raise ConfigurationError(f"n_dqd must be an integer, got {n!r}")
        else:
            object.__setattr__(self, "n_dqd", int(n))
        for name in ("t_max", "omega_max", "omega_s_ratio", "sigma_ratio",
                     "gamma", "margin_ratio"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.n_dqd < 3:
            raise ConfigurationError("n_dqd must be >= 3")
        if self.n_dqd % 2 == 0:
            raise ConfigurationError("n_dqd must be odd")
        for name in ("t_max", "omega_max", "omega_s_ratio"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive, got {value!r}")
        if not 0.0 < self.sigma_ratio < 0.5:
            raise ConfigurationError(
                f"sigma_ratio must lie in (0, 1/2), got {self.sigma_ratio!r}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ConfigurationError(f"gamma must be >= 0, got {self.gamma!r}")
        if not (math.isfinite(self.margin_ratio) and self.margin_ratio >= 0):
            raise ConfigurationError(
                f"margin_ratio must be >= 0, got {self.margin_ratio!r}")

    @classmethod
    def from_pi_units(cls, n_dqd, t_max_pi, omega_max=1.0, gamma_ratio=0.0, **kwargs):
        """Build a config from ``t_max`` in pi/omega_max and gamma in omega_max."""
        return cls(n_dqd=n_dqd, t_max=t_max_pi * math.pi / omega_max,
                   omega_max=omega_max, gamma=gamma_ratio * omega_max, **kwargs)

    @property
    def sigma(self):
        return self.sigma_ratio * self.t_max

    @property
    def omega_s_max(self):
        return self.omega_s_ratio * self.omega_max

    @property
    def t_end(self):
        """End of the integration window."""
        return self.t_max * (1.0 + self.margin_ratio)

    @property
    def t_max_pi(self):
        """``t_max`` expressed in units of pi/omega_max."""
        return self.t_max * self.omega_max / math.pi

    @property
    def dim(self):
        return self.n_dqd * self.n_dqd

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return {
            "n_dqd": self.n_dqd,
            "t_max": self.t_max,
            "omega_max": self.omega_max,
            "omega_s_ratio": self.omega_s_ratio,
            "sigma_ratio": self.sigma_ratio,
            "gamma": self.gamma,
            "margin_ratio": self.margin_ratio,
        }


class BasisIndex(NamedTuple):
    pair_site: int
    single_site: int
    flat_index: int

    @property
    def label(self):
        return f"P{self.pair_site}S{self.single_site}"


def basis_label(flat_index, n_dqd):
    """Return the (pair site, single site) of a flat basis index, 1-based."""
    if not 0 <= flat_index < n_dqd * n_dqd:
        raise IndexError(f"basis index {flat_index} out of range for N={n_dqd}")
    a, b = divmod(int(flat_index), n_dqd)
    return BasisIndex(a + 1, b + 1, int(flat_index))


def basis_index(pair_site, single_site, n_dqd):
    """Inverse of :func:`basis_label`."""
    if not (1 <= pair_site <= n_dqd and 1 <= single_site <= n_dqd):
        raise IndexError(f"sites ({pair_site}, {single_site}) out of range for N={n_dqd}")
    return (pair_site - 1) * n_dqd + (single_site - 1)


def basis_labels(n_dqd):
    return [basis_label(i, n_dqd).label for i in range(n_dqd * n_dqd)]


@dataclass(frozen=True)
class GaussianPulse:
    amplitude: float
    peak_time: float
    std: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-0.5 * ((t - self.peak_time) / self.std) ** 2)


@dataclass(frozen=True)
class PulseSchedule:
    """Tunnelling rates ``omega_{k,k+1}(t)`` for the ``N - 1`` links.

    ``pulses[k]`` drives the link between double dots ``k + 1`` and
    ``k + 2``; ``families[k]`` says whether it is the initial link, one of
    the interior links or the final link.
    """

    pulses: tuple
    families: tuple
    omega_max: float = 1.0

    def __post_init__(self):
        if len(self.pulses) != len(self.families):
            raise DimensionError("one family label is needed per pulse")
        if len(self.pulses) < 2:
            raise DimensionError("a schedule needs at least two links")
        for p in self.pulses:
            if p.amplitude < 0 or p.std <= 0:
                raise ConfigurationError(f"invalid pulse {p}")

    @property
    def n_links(self):
        return len(self.pulses)

    @property
    def n_dqd(self):
        return len(self.pulses) + 1

    def link(self, k):
        """The pulse of link ``k`` (1-based, ``k`` couples dots k and k+1)."""
        if not 1 <= k <= self.n_links:
            raise IndexError(f"link {k} out of range 1..{self.n_links}")
        return self.pulses[k - 1]

    def amplitudes(self, t):
        """Rates of every link at ``t``; shape ``(n_links,) + shape(t)``."""
        return np.stack([p(t) for p in self.pulses])

    def parameters(self):
        """Arrays ``(amplitude, peak_time, std)`` with one entry per link."""
        amp = np.array([p.amplitude for p in self.pulses], dtype=float)
        cen = np.array([p.peak_time for p in self.pulses], dtype=float)
        std = np.array([p.std for p in self.pulses], dtype=float)
        return amp, cen, std

    def links_of(self, family):
        return [k for k, f in enumerate(self.families) if f == family]

    def descriptor(self):
        return [
            {"link": k + 1, "family": f, "amplitude": p.amplitude,
             "peak_time": p.peak_time, "std": p.std}
            for k, (p, f) in enumerate(zip(self.pulses, self.families))
        ]

    def time_reversed(self, t_total):
        """Schedule with ``omega'(t) = omega(t_total - t)`` on every link."""
        pulses = tuple(replace(p, peak_time=t_total - p.peak_time) for p in self.pulses)
        return replace(self, pulses=pulses)


def make_schedule(config):
    """Counter-intuitive Gaussian pulse sequence for ``config``.

    The final link peaks at ``t_max/2 - sigma`` before the initial link at
    ``t_max/2 + sigma``; interior links share one broader pulse (standard
    deviation ``sqrt(2) sigma``) centred at ``t_max/2`` with peak
    ``omega_s_ratio * omega_max``.
    """
    if not isinstance(config, ChainConfig):
        raise ConfigurationError("make_schedule expects a ChainConfig")
    half, sigma = 0.5 * config.t_max, config.sigma
    initial = GaussianPulse(config.omega_max, half + sigma, sigma)
    final = GaussianPulse(config.omega_max, half - sigma, sigma)
    interior = GaussianPulse(config.omega_s_max, half, math.sqrt(2.0) * sigma)
    n_interior = config.n_dqd - 3
    pulses = (initial,) + (interior,) * n_interior + (final,)
    families = ("initial",) + ("interior",) * n_interior + ("final",)
    return PulseSchedule(pulses, families, config.omega_max)


def coupling_matrix(schedule, t):
    """Single-particle hopping matrix A(t): tridiagonal, off-diagonals -omega_k(t)."""
    w = schedule.amplitudes(float(t))
    n = schedule.n_dqd
    a = np.zeros((n, n))
    k = np.arange(n - 1)
    a[k, k + 1] = -w
    a[k + 1, k] = -w
    return a


@dataclass(frozen=True)
class HamiltonianFrame:
    matrix: np.ndarray = field(repr=False)
    time: float


def build_hamiltonian(schedule, t, n_dqd):
    """Interaction Hamiltonian W(t) in the pair-major position basis.

    A single-electron hop changes ``b`` by one and a pair hop changes ``a``
    by one; both use the rate of the link they cross.
    """
    if schedule.n_dqd != n_dqd:
        raise DimensionError(
            f"schedule has {schedule.n_links} links, N={n_dqd} needs {n_dqd - 1}")
    w = schedule.amplitudes(float(t))
    n = n_dqd
    m = n * n
    h = np.zeros((m, m))
    for a in range(n):
        for b in range(n - 1):
            # single electron S_b <-> S_{b+1}, pair fixed at a
            i, j = a * n + b, a * n + b + 1
            h[i, j] = h[j, i] = -w[b]
    for a in range(n - 1):
        for b in range(n):
            # pair P_a <-> P_{a+1}, single electron fixed at b
            i, j = a * n + b, (a + 1) * n + b
            h[i, j] = h[j, i] = -w[a]
    return HamiltonianFrame(h, float(t))
