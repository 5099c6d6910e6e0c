"""Instantaneous spectra, zero-energy eigenstates and leakage.

For N = 3 the zero-energy eigenspace of W is spanned by three closed-form
states.  ``D_0`` and ``D_1`` are not mutually orthogonal (their overlap is
``(2 wi^2 - wf^2) / sqrt(3 (2 wi^4 + wf^4))``) but the three states are
always linearly independent.  The transport channel is the combination

    |D> = [wf^2 |P1S1> - wi wf (|P1S3> + |P3S1>) + wi^2 |P3S3>] / (wi^2 + wf^2)

which never populates the central double dot.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .chain import build_hamiltonian, basis_index
from .dynamics import fmt
from .errors import DegenerateInputError, InsufficientDataError, NumericalError

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class SpectrumSample:
    time: float
    eigenvalues: np.ndarray = field(repr=False)
    zero_multiplicity: int


@dataclass(frozen=True)
class DarkState:
    vector: np.ndarray = field(repr=False)
    omega_i: float
    omega_f: float


def _eigh(matrix, values_only=False):
    try:
        if values_only:
            return np.linalg.eigvalsh(matrix)
        return np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc


def spectrum_at(schedule, t, n_dqd, tol=DEGENERACY_TOL):
    """Sorted eigenvalues of W(t) and the multiplicity of the zero level.

    ``tol`` is relative to ``schedule.omega_max``.
    """
    w = build_hamiltonian(schedule, t, n_dqd).matrix
    lam = np.sort(_eigh(w, values_only=True))
    zeros = int(np.count_nonzero(np.abs(lam) <= tol * schedule.omega_max))
    return SpectrumSample(float(t), lam, zeros)


def spectrum_series(schedule, times, n_dqd, tol=DEGENERACY_TOL):
    return [spectrum_at(schedule, t, n_dqd, tol) for t in times]


def write_spectrum_csv(path, samples):
    m = len(samples[0].eigenvalues)
    header = ["t"] + [f"lambda_{k + 1}" for k in range(m)] + ["zero_multiplicity"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for s in samples:
            writer.writerow([fmt(s.time)] + [fmt(v) for v in s.eigenvalues]
                            + [str(s.zero_multiplicity)])


def _ket(pairs, n=3):
    v = np.zeros(n * n)
    for (a, b), c in pairs:
        v[basis_index(a, b, n)] += c
    return v


def _require_nonzero(omega_i, omega_f):
    if omega_i == 0 and omega_f == 0:
        raise DegenerateInputError("omega_i and omega_f are both zero")


def degenerate_triplet(omega_i, omega_f):
    """The three zero-energy eigenstates ``(D_0, D_-1, D_1)`` of the N=3 chain."""
    _require_nonzero(omega_i, omega_f)
    wi, wf = float(omega_i), float(omega_f)
    d0 = _ket([((1, 1), -(wf ** 2 - wi ** 2)), ((1, 3), wi * wf), ((3, 1), wi * wf),
               ((2, 2), -wi ** 2)]) / math.sqrt(2 * wi ** 4 + wf ** 4)
    dm1 = _ket([((1, 2), wi), ((2, 1), -wi), ((2, 3), -wf), ((3, 2), wf)]) \
        / math.sqrt(2 * (wi ** 2 + wf ** 2))
    d1 = _ket([((1, 1), 1.0), ((2, 2), -1.0), ((3, 3), 1.0)]) / math.sqrt(3)
    return d0, dm1, d1


def dark_state(omega_i, omega_f):
    """Normalised transport dark state of the N=3 chain."""
    _require_nonzero(omega_i, omega_f)
    wi, wf = float(omega_i), float(omega_f)
    norm = wi ** 2 + wf ** 2
    v = _ket([((1, 1), wf ** 2 / norm), ((1, 3), -wi * wf / norm),
              ((3, 1), -wi * wf / norm), ((3, 3), wi ** 2 / norm)])
    return DarkState(v, wi, wf)


def zero_projector(schedule, t, n_dqd, tol=DEGENERACY_TOL):
    """Projector onto the eigenvectors of W(t) with ``|lambda| <= tol * omega_max``."""
    w = build_hamiltonian(schedule, t, n_dqd).matrix
    lam, vec = _eigh(w)
    keep = vec[:, np.abs(lam) <= tol * schedule.omega_max]
    return keep @ keep.T


def leakage(trajectory, schedule, tol=DEGENERACY_TOL):
    """``1 - tr(P0(t) rho(t))`` at every full-state snapshot of a trajectory."""
    states = trajectory.snapshots
    if states is None or len(states) == 0:
        raise InsufficientDataError("trajectory carries no full-state snapshots")
    out = np.empty(len(states))
    for k, (t, rho) in enumerate(zip(trajectory.snapshot_times, states)):
        p0 = zero_projector(schedule, t, trajectory.n_dqd, tol)
        out[k] = 1.0 - np.trace(p0 @ rho).real
    return out
