import math

import numpy as np
import pytest

from ctapchain import (ChainConfig, IntegratorSettings, MiscalibrationSpec, SwapComparisonSpec,
                       SweepAxis, SweepSpec, ctap_vs_swap, find_optimal_tmax, make_schedule,
                       miscalibration_curve, perturb_schedule, run_sweep, swap_transfer_time,
                       transfer_probability)
from ctapchain.analysis import minimal_tmax
from ctapchain.errors import ConfigurationError, TargetUnavailableError

PI = math.pi
COARSE = IntegratorSettings(steps_per_tmax=4000)


# --- sweep specification -------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(name="t_max", start=1, stop=2, count=1),
    dict(name="sigma", start=1, stop=2, count=3),
    dict(name="t_max", start=0, stop=2, count=3),
    dict(name="gamma", start=-0.1, stop=0.1, count=3),
    dict(name="gamma", start=0, stop=0.1, count=3, spacing="log"),
    dict(name="n_dqd", start=3, stop=9, count=3),
    dict(name="t_max", start=1, stop=2, count=3, spacing="cubic"),
])
def test_axis_validation(kwargs):
    with pytest.raises(ConfigurationError):
        SweepAxis(**kwargs)


def test_axis_values():
    assert SweepAxis("n_dqd", 3, 9, 4).values().tolist() == [3, 5, 7, 9]
    assert np.allclose(SweepAxis("omega_max", 0.1, 10, 3, "log").values(), [0.1, 1, 10])


def test_spec_validation():
    base = ChainConfig(3, 10.0)
    ax = SweepAxis("t_max", 1, 2, 2)
    with pytest.raises(ConfigurationError):
        SweepSpec(base, [])
    with pytest.raises(ConfigurationError):
        SweepSpec(base, [ax, ax])
    with pytest.raises(ConfigurationError):
        SweepSpec(base, [ax, SweepAxis("gamma", 0, 1, 2), SweepAxis("omega_max", 1, 2, 2),
                         SweepAxis("n_dqd", 3, 5, 2)])
    with pytest.raises(ConfigurationError):
        SweepSpec(base, [ax], observable="purity")


# --- sweeps --------------------------------------------------------------

@pytest.fixture(scope="module")
def tmax_sweep():
    spec = SweepSpec(ChainConfig(3, 1.0), [SweepAxis("t_max", 1 * PI, 50 * PI, 8)])
    return run_sweep(spec)


def test_tmax_sweep_rises_to_one(tmax_sweep):
    t = tmax_sweep.coordinates[0] / PI
    v = tmax_sweep.values
    assert tmax_sweep.ok
    assert v[0] < 0.5 and v[-1] > 0.999
    inside = (t >= 10) & (t <= 40)
    assert np.any(v[inside] > 0.9)
    assert np.all((v >= -1e-6) & (v <= 1 + 1e-6))


def test_gamma_sweep_non_increasing():
    spec = SweepSpec(ChainConfig.from_pi_units(3, 25), [SweepAxis("gamma", 0, 0.2, 5)])
    v = run_sweep(spec).values
    assert np.all(np.diff(v) <= 0)


def test_infidelity_observable():
    base = ChainConfig.from_pi_units(3, 25)
    ax = [SweepAxis("gamma", 0, 0.05, 2)]
    p = run_sweep(SweepSpec(base, ax, settings=COARSE)).values
    q = run_sweep(SweepSpec(base, ax, "infidelity_delta", COARSE)).values
    assert np.allclose(p + q, 1.0, atol=0)


def test_sweep_order_and_workers_invariant():
    spec = SweepSpec(ChainConfig.from_pi_units(3, 10),
                     [SweepAxis("t_max", 5, 30, 3), SweepAxis("gamma", 0, 0.1, 2)],
                     settings=COARSE)
    ref = run_sweep(spec)
    perm = run_sweep(spec, order=[5, 2, 0, 4, 1, 3])
    par = run_sweep(spec, workers=2)
    assert np.array_equal(ref.values, perm.values)
    assert np.array_equal(ref.values, par.values)
    with pytest.raises(ValueError):
        run_sweep(spec, order=[0, 0, 1, 2, 3, 4])


def test_sweep_records_failed_point(tmp_path):
    spec = SweepSpec(ChainConfig(3, 1.0), [SweepAxis("omega_max", 1, 1e4, 2, "log")],
                     settings=IntegratorSettings(steps_per_tmax=200))
    res = run_sweep(spec)
    assert res.status.tolist() == ["ok", "error"]
    assert np.isfinite(res.values[0]) and np.isnan(res.values[1])
    assert "IntegrationError" in res.errors[(1,)]
    res.to_csv(tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "omega_max,transfer_probability,status"
    assert rows[2] == "10000,,error"


def test_sweep_provenance(tmax_sweep):
    prov = tmax_sweep.provenance
    assert prov["seedless"] is True
    assert prov["base_config"]["sigma_ratio"] == 0.125
    assert prov["integrator"]["steps_per_tmax"] == 50000
    assert len(prov["schedule"]) == 2


def test_n_dqd_axis():
    spec = SweepSpec(ChainConfig.from_pi_units(3, 30), [SweepAxis("n_dqd", 3, 5, 2)],
                     settings=COARSE)
    res = run_sweep(spec)
    assert res.coordinates[0].tolist() == [3, 5]
    assert res.ok


# --- optimum search ------------------------------------------------------

def test_optimal_tmax_plateau():
    best = find_optimal_tmax(ChainConfig(3, 1.0), (1 * PI, 50 * PI), 2.5 * PI)
    assert best.rho_ff >= 0.999
    top = np.nanmax(best.scan_rho_ff)
    first = best.scan_t_max[np.flatnonzero(best.scan_rho_ff >= top - 1e-4)[0]]
    assert best.t_max == first


@pytest.mark.parametrize("rng", [(10.0, 5.0), (0.0, 5.0), (-1.0, 2.0), (1.0, 1.0),
                                 (1.0, math.inf)])
def test_optimal_tmax_bad_range(rng):
    with pytest.raises(ValueError):
        find_optimal_tmax(ChainConfig(3, 1.0), rng, 1.0)


def test_optimal_tmax_refines_between_grid_points():
    c = ChainConfig.from_pi_units(3, 10, gamma_ratio=0.05)
    best = find_optimal_tmax(c, (2 * PI, 30 * PI), 4 * PI, COARSE)
    grid_best = np.nanmax(best.scan_rho_ff)
    assert best.rho_ff >= grid_best
    assert best.scan_t_max[0] < best.t_max < best.scan_t_max[-1]


def test_optimum_ordering_in_chain_length(n9_figscale_optimum):
    s = PI / 10
    opts = {}
    for n in (3, 5):
        c = ChainConfig.from_pi_units(n, 20, omega_max=10.0, gamma_ratio=0.005)
        opts[n] = find_optimal_tmax(c, (5 * s, 60 * s), 2.5 * s).t_max / s
    assert opts[3] < opts[5] < n9_figscale_optimum.t_max / s


def test_optimum_non_increasing_in_gamma():
    vals = []
    for g in (0.0, 0.02, 0.05):
        c = ChainConfig.from_pi_units(3, 20, gamma_ratio=g)
        vals.append(find_optimal_tmax(c, (5 * PI, 45 * PI), 5 * PI, COARSE).rho_ff)
    assert vals[0] >= vals[1] >= vals[2]


def test_minimal_tmax_unreachable():
    assert minimal_tmax(ChainConfig(3, 1.0), 0.99, (0.1, 1.0), 0.3, 0.01, COARSE) is None


# --- miscalibration ------------------------------------------------------

def test_amplitude_perturbation_n3():
    c = ChainConfig.from_pi_units(3, 25)
    s = make_schedule(c)
    p = perturb_schedule(s, MiscalibrationSpec("omega_i", "amplitude", 0.10))
    assert p.link(1).amplitude == pytest.approx(1.10 * c.omega_max, rel=1e-15)
    assert p.link(2) == s.link(2)
    assert p.link(1).peak_time == s.link(1).peak_time


def test_peak_time_perturbation():
    c = ChainConfig.from_pi_units(5, 25)
    s = make_schedule(c)
    p = perturb_schedule(s, MiscalibrationSpec("omega_f", "peak_time", 0.01))
    assert p.link(4).peak_time == pytest.approx(1.01 * (c.t_max / 2 - c.sigma), rel=1e-15)
    assert p.pulses[:3] == s.pulses[:3]


def test_interior_perturbation_touches_only_interior():
    s = make_schedule(ChainConfig.from_pi_units(7, 25))
    p = perturb_schedule(s, MiscalibrationSpec("omega_interior", "amplitude", -0.2))
    changed = [k for k in range(s.n_links) if p.pulses[k] != s.pulses[k]]
    assert changed == s.links_of("interior")


@pytest.mark.parametrize("target", ["omega_i", "omega_interior", "omega_f"])
@pytest.mark.parametrize("kind", ["amplitude", "peak_time"])
def test_zero_fraction_identity(target, kind):
    s = make_schedule(ChainConfig(5, 10.0))
    assert perturb_schedule(s, MiscalibrationSpec(target, kind, 0.0)) == s


def test_interior_unavailable_for_n3():
    with pytest.raises(TargetUnavailableError):
        perturb_schedule(make_schedule(ChainConfig(3, 1.0)),
                         MiscalibrationSpec("omega_interior", "amplitude", 0.1))


def test_bad_miscalibration_spec():
    with pytest.raises(ConfigurationError):
        MiscalibrationSpec("omega_x", "amplitude", 0.1)
    with pytest.raises(ConfigurationError):
        MiscalibrationSpec("omega_i", "width", 0.1)


def test_zero_fraction_curve_is_zero():
    c = ChainConfig(3, 1.0)
    curve = miscalibration_curve(c, MiscalibrationSpec("omega_f", "peak_time", 0.0),
                                 [10 * PI, 25 * PI], COARSE)
    assert np.all(np.abs(curve.delta) <= 1e-12)


def test_peak_time_more_sensitive_n3():
    c = ChainConfig(3, 1.0)
    t = [25 * PI, 35 * PI]
    pt = miscalibration_curve(c, MiscalibrationSpec("omega_i", "peak_time", 0.10), t)
    am = miscalibration_curve(c, MiscalibrationSpec("omega_i", "amplitude", 0.10), t)
    assert np.all(pt.delta >= am.delta)


def test_small_amplitude_error_tolerated():
    c = ChainConfig(3, 1.0)
    curve = miscalibration_curve(c, MiscalibrationSpec("omega_f", "amplitude", 0.01),
                                 [25 * PI, 40 * PI])
    assert np.all(curve.delta <= 0.01)


# --- SWAP comparison -----------------------------------------------------

def test_swap_time_n3():
    spec = SwapComparisonSpec((3,), omega_max=500.0, delta_e_st=500.0)
    assert swap_transfer_time(spec, 3) == 2 * 11.254


def test_swap_time_linear_in_chain_length():
    spec = SwapComparisonSpec((3,), omega_max=37.0, delta_e_st=500.0)
    t3 = swap_transfer_time(spec, 3)
    assert swap_transfer_time(spec, 9) / t3 == 4.0
    for n in (5, 7, 11, 21):
        assert swap_transfer_time(spec, n) == pytest.approx((n - 1) / 2 * t3, rel=1e-15)


def test_swap_time_inverse_square_in_rate():
    times = {w: swap_transfer_time(SwapComparisonSpec((3,), w, 500.0), 5)
             for w in (50.0, 100.0, 200.0)}
    assert times[50.0] / times[100.0] == pytest.approx(4.0, rel=1e-15)
    assert times[100.0] / times[200.0] == pytest.approx(4.0, rel=1e-15)


@pytest.mark.parametrize("n", [2, 4, 1, 3.5, True])
def test_swap_time_bad_n(n):
    with pytest.raises(ValueError):
        swap_transfer_time(SwapComparisonSpec((3,), 1.0, 1.0), n)


@pytest.mark.parametrize("kwargs", [
    dict(n_values=(4,), omega_max=1.0, delta_e_st=1.0),
    dict(n_values=(3,), omega_max=0.0, delta_e_st=1.0),
    dict(n_values=(3,), omega_max=1.0, delta_e_st=-1.0),
    dict(n_values=(3,), omega_max=1.0, delta_e_st=1.0, ctap_threshold=0.4),
    dict(n_values=(3,), omega_max=1.0, delta_e_st=1.0, ctap_threshold=1.0),
])
def test_swap_spec_validation(kwargs):
    with pytest.raises(ConfigurationError):
        SwapComparisonSpec(**kwargs)


COMPARE = dict(search_range_pi=(5.0, 60.0), resolution_pi=5.0, tolerance_pi=0.05)


def test_rate_decides_preferred_scheme():
    template = ChainConfig(3, 1.0)
    low = ctap_vs_swap(SwapComparisonSpec((3, 5), 50.0, 500.0, **COMPARE), template)
    high = ctap_vs_swap(SwapComparisonSpec((3, 5), 5000.0, 500.0, **COMPARE), template)
    assert low.faster == ["ctap", "ctap"]
    assert high.faster == ["swap", "swap"]
    assert low.crossover_n is None and high.crossover_n is None


def test_ctap_time_reaches_threshold():
    spec = SwapComparisonSpec((3,), 1.0, 1.0, **COMPARE)
    table = ctap_vs_swap(spec, ChainConfig(3, 1.0))
    x = 2 * table.t_ctap[0]
    assert transfer_probability(ChainConfig.from_pi_units(3, x)) >= 0.99
    assert transfer_probability(ChainConfig.from_pi_units(3, x - 0.1)) < 0.99


def test_comparison_csv(tmp_path):
    spec = SwapComparisonSpec((3,), 50.0, 500.0, **COMPARE)
    table = ctap_vs_swap(spec, ChainConfig(3, 1.0))
    table.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "N,t_ctap,t_swap,faster"
    assert lines[1].startswith("3,") and lines[1].endswith(",ctap")
