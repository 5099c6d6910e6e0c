"""Command-line front end.

    ctapchain simulate     --config run.ini --out results/
    ctapchain spectrum     --config run.ini --out results/ --samples 100
    ctapchain sweep        --config sweep.ini --out results/ --workers 4
    ctapchain optimize     --config opt.ini --out results/
    ctapchain miscalibrate --config mis.ini --out results/
    ctapchain swap-compare --config swap.ini --out results/

Each command writes one CSV file and a ``<name>.meta.ini`` sidecar with
every effective parameter.  Exit status: 0 success, 1 failure, 3 partial
success (some sweep or scan points failed).  On failure a JSON summary is
printed to stderr and recorded in the sidecar.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .analysis import (SweepSpec, ctap_vs_swap, find_optimal_tmax, miscalibration_curve,
                       run_sweep)
from .chain import make_schedule
from .configio import chain_section, parse_config, parse_quantity, write_metadata
from .dynamics import evolve, fmt
from .errors import CTAPError, ConfigurationError
from .spectral import spectrum_series, write_spectrum_csv

COMMANDS = ("simulate", "spectrum", "sweep", "optimize", "miscalibrate", "swap-compare")
EXIT_OK, EXIT_FAIL, EXIT_PARTIAL = 0, 1, 3


@dataclass
class RunManifest:
    command: str
    config_path: str
    output_dir: str
    workers: int = 1
    samples: int | None = None
    overrides: dict = field(default_factory=dict)
    seedless: bool = True
    tool_version: str = __version__

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"unknown command {self.command!r}")


@dataclass
class _Outcome:
    csv_name: str
    sections: dict
    errors: list = field(default_factory=list)
    partial: bool = False


def _apply_overrides(parsed, overrides):
    changes = {}
    if overrides.get("n") is not None:
        changes["n_dqd"] = int(overrides["n"])
    if overrides.get("gamma") is not None:
        changes["gamma"] = parse_quantity(overrides["gamma"])
    if overrides.get("omega_max") is not None:
        changes["omega_max"] = parse_quantity(overrides["omega_max"])
    if overrides.get("tmax") is not None:
        changes["t_max"] = parse_quantity(overrides["tmax"])
    if changes:
        parsed.chain = replace(parsed.chain, **changes)
    return parsed


def _simulate(p, out, samples, workers):
    schedule = make_schedule(p.chain)
    traj = evolve(p.chain, schedule, settings=p.integrator, samples=samples)
    traj.to_csv(os.path.join(out, "trajectory.csv"))
    return _Outcome("trajectory.csv", {
        "schedule": _schedule_meta(schedule),
        "result": {"rho_ff": traj.rho_ff, "samples": samples, "n_steps": traj.n_steps,
                   "step": traj.step, "hermiticity_drift": traj.hermiticity_drift,
                   "max_trace_deviation": traj.max_trace_deviation,
                   "min_eigenvalue": traj.min_eigenvalue},
    })


def _spectrum(p, out, samples, workers):
    schedule = make_schedule(p.chain)
    times = np.linspace(0.0, p.chain.t_max, samples)
    series = spectrum_series(schedule, times, p.chain.n_dqd)
    write_spectrum_csv(os.path.join(out, "spectrum.csv"), series)
    mult = [s.zero_multiplicity for s in series]
    return _Outcome("spectrum.csv", {
        "schedule": _schedule_meta(schedule),
        "result": {"samples": samples, "t_start": 0.0, "t_stop": p.chain.t_max,
                   "zero_multiplicity_min": min(mult), "zero_multiplicity_max": max(mult)},
    })


def _sweep(p, out, samples, workers):
    if not p.axes:
        raise ConfigurationError("sweep needs at least one [axis:<name>] section")
    result = run_sweep(SweepSpec(p.chain, p.axes, p.observable, p.integrator), workers=workers)
    result.to_csv(os.path.join(out, "sweep.csv"))
    sections = {"sweep": {"observable": p.observable, "points": int(result.values.size),
                          "failed_points": len(result.errors)}}
    for a in p.axes:
        sections[f"axis:{a.name}"] = {"start": float(a.start), "stop": float(a.stop),
                                      "count": int(a.count), "spacing": a.spacing}
    errors = [{"point": dict(zip(result.names, (_plain(c[i]) for c, i in
                                                 zip(result.coordinates, idx)))),
               "error": msg} for idx, msg in sorted(result.errors.items())]
    return _Outcome("sweep.csv", sections, errors, partial=bool(errors))


def _optimize(p, out, samples, workers):
    opts = p.optimize or {}
    scale = math.pi / p.chain.omega_max
    lo = opts.get("start", 5 * scale)
    hi = opts.get("stop", 60 * scale)
    res = opts.get("resolution", 2.5 * scale)
    best = find_optimal_tmax(p.chain, (lo, hi), res, p.integrator, workers)
    with open(os.path.join(out, "optimize.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_max", "t_max_pi", "rho_ff", "status"])
        for t, r in zip(best.scan_t_max, best.scan_rho_ff):
            ok = np.isfinite(r)
            writer.writerow([fmt(t), fmt(t / scale), fmt(r) if ok else "", "ok" if ok else "error"])
    failed = int(np.count_nonzero(~np.isfinite(best.scan_rho_ff)))
    return _Outcome("optimize.csv", {
        "optimize": {"start_pi": lo / scale, "stop_pi": hi / scale,
                     "resolution_pi": res / scale, "failed_points": failed},
        "result": {"t_max_opt": best.t_max, "t_max_opt_pi": best.t_max / scale,
                   "rho_ff_max": best.rho_ff},
    }, partial=failed > 0)


def _miscalibrate(p, out, samples, workers):
    if p.miscalibration is None:
        raise ConfigurationError("miscalibrate needs a [miscalibrate] section")
    m = p.miscalibration
    scale = math.pi / p.chain.omega_max
    lo = m.get("start", 10 * scale)
    hi = m.get("stop", 50 * scale)
    count = m.get("count", 9)
    curve = miscalibration_curve(p.chain, m["spec"], np.linspace(lo, hi, count), p.integrator)
    with open(os.path.join(out, "miscalibration.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_max", "t_max_pi", "rho_ideal", "rho_perturbed", "delta", "status"])
        for k, t in enumerate(curve.t_max):
            if k in curve.errors:
                writer.writerow([fmt(t), fmt(t / scale), "", "", "", "error"])
            else:
                writer.writerow([fmt(t), fmt(t / scale), fmt(curve.rho_ideal[k]),
                                 fmt(curve.rho_perturbed[k]), fmt(curve.delta[k]), "ok"])
    errors = [{"t_max": float(curve.t_max[k]), "error": msg}
              for k, msg in sorted(curve.errors.items())]
    return _Outcome("miscalibration.csv", {
        "miscalibrate": {"target": m["spec"].target, "kind": m["spec"].kind,
                         "fraction": m["spec"].fraction, "start_pi": lo / scale,
                         "stop_pi": hi / scale, "count": count},
    }, errors, partial=bool(errors))


def _swap_compare(p, out, samples, workers):
    if p.swap is None:
        raise ConfigurationError("swap-compare needs a [swap] section")
    table = ctap_vs_swap(p.swap, p.chain, p.integrator)
    table.to_csv(os.path.join(out, "comparison.csv"))
    s = p.swap
    return _Outcome("comparison.csv", {
        "swap": {"n_values": list(s.n_values), "omega_max": s.omega_max,
                 "delta_e_st": s.delta_e_st, "t_swap_units": s.t_swap_units,
                 "ctap_threshold": s.ctap_threshold, "search_range_pi": list(s.search_range_pi),
                 "resolution_pi": s.resolution_pi, "tolerance_pi": s.tolerance_pi,
                 "time_unit": "h/delta_e_st"},
        "result": {"crossover_n": "none" if table.crossover_n is None else table.crossover_n},
    })


_HANDLERS = {"simulate": _simulate, "spectrum": _spectrum, "sweep": _sweep,
             "optimize": _optimize, "miscalibrate": _miscalibrate,
             "swap-compare": _swap_compare}
_DEFAULT_SAMPLES = {"spectrum": 100}


def _plain(v):
    return int(v) if isinstance(v, (int, np.integer)) else float(v)


def _schedule_meta(schedule):
    items = {}
    for k, (pulse, family) in enumerate(zip(schedule.pulses, schedule.families), start=1):
        items[f"link{k}"] = (f"family={family} amplitude={fmt(pulse.amplitude)} "
                             f"peak_time={fmt(pulse.peak_time)} std={fmt(pulse.std)}")
    return items


def run(manifest):
    """Execute one command; returns the process exit status."""
    os.makedirs(manifest.output_dir, exist_ok=True)
    meta_path = os.path.join(manifest.output_dir, f"{manifest.command}.meta.ini")
    sections = {"run": {"command": manifest.command, "config_path": manifest.config_path,
                        "tool_version": manifest.tool_version, "seedless": "true",
                        "workers": manifest.workers}}
    try:
        parsed = _apply_overrides(parse_config(manifest.config_path), manifest.overrides)
        samples = manifest.samples or (
            _DEFAULT_SAMPLES.get(manifest.command, parsed.samples))
        sections["chain"] = chain_section(parsed.chain)
        sections["chain"]["t_max_pi"] = repr(parsed.chain.t_max_pi)
        sections["integrator"] = parsed.integrator.as_dict()
        sections["output"] = {"samples": samples}
        outcome = _HANDLERS[manifest.command](parsed, manifest.output_dir, samples,
                                              manifest.workers)
    except (CTAPError, ValueError, OSError) as exc:
        summary = {"command": manifest.command, "status": "failed",
                   "error_type": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "time", None) is not None:
            summary["time"] = exc.time
        sections["status"] = {"exit_status": EXIT_FAIL, "summary": json.dumps(summary, sort_keys=True)}
        _safe_write_meta(meta_path, sections)
        print(json.dumps(summary, sort_keys=True), file=sys.stderr)
        return EXIT_FAIL

    sections.update(outcome.sections)
    status = EXIT_PARTIAL if outcome.partial else EXIT_OK
    sections["outputs"] = {"data": outcome.csv_name}
    sections["status"] = {"exit_status": status,
                          "state": "partial" if outcome.partial else "ok"}
    if outcome.errors:
        summary = {"command": manifest.command, "status": "partial", "errors": outcome.errors}
        sections["status"]["summary"] = json.dumps(summary, sort_keys=True)
        print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    write_metadata(meta_path, sections)
    return status


def _safe_write_meta(path, sections):
    try:
        write_metadata(path, sections)
    except OSError:
        pass


def build_parser():
    parser = argparse.ArgumentParser(prog="ctapchain", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
        p.add_argument("--samples", type=int, default=None, help="output time samples")
        p.add_argument("--tmax", default=None, help="pulse time, e.g. 78.5 or 25pi")
        p.add_argument("--gamma", default=None, help="dephasing rate")
        p.add_argument("--n", type=int, default=None, help="number of double dots")
        p.add_argument("--omega-max", dest="omega_max", default=None, help="peak link rate")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("--workers must be >= 1", file=sys.stderr)
        return 2
    manifest = RunManifest(
        command=args.command, config_path=args.config, output_dir=args.out,
        workers=args.workers, samples=args.samples,
        overrides={"tmax": args.tmax, "gamma": args.gamma, "n": args.n,
                   "omega_max": args.omega_max})
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
