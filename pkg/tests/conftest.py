import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ctap", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("ctap")

PI = math.pi

# Every successful evolution is recorded with the id of the test that ran
# it, so the acceptance suite can audit physical invariants afterwards.
INTEGRATIONS = []
ACCEPTANCE_LINES = []
_active = {"node": None}


def _install_recorder():
    import numpy as np
    import ctapchain
    from ctapchain import dynamics

    inner = dynamics.evolve

    def recorded(config, *args, **kwargs):
        traj = inner(config, *args, **kwargs)
        pure = abs(traj.purities[0] - 1.0) < 1e-12
        INTEGRATIONS.append({
            "node": _active["node"], "n_dqd": config.n_dqd, "gamma": config.gamma,
            "trace_dev": float(np.max(np.abs(traj.traces - 1.0))),
            "step_trace_dev": traj.max_trace_deviation,
            "drift": traj.hermiticity_drift, "min_eig": traj.min_eigenvalue,
            "purity_dev": (float(np.max(np.abs(traj.purities - 1.0)))
                           if config.gamma == 0 and pure else None),
        })
        return traj

    dynamics.evolve = recorded
    ctapchain.evolve = recorded


def pytest_configure(config):
    _install_recorder()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_protocol(item, nextitem):
    _active["node"] = item.nodeid
    yield
    _active["node"] = None


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fig5_config():
    from ctapchain import ChainConfig
    return ChainConfig.from_pi_units(3, 25)


@pytest.fixture(scope="session")
def fig5_trajectory(fig5_config):
    from ctapchain import evolve
    return evolve(fig5_config, samples=2000)


@pytest.fixture(scope="session")
def n9_figscale_optimum():
    """N=9 optimum with omega_max = 10 and gamma = 0.05 on one absolute scale."""
    from ctapchain import ChainConfig, find_optimal_tmax
    s = PI / 10
    c = ChainConfig.from_pi_units(9, 29.1, omega_max=10.0, gamma_ratio=0.005)
    return find_optimal_tmax(c, (5 * s, 60 * s), 5 * s)


@pytest.fixture(scope="session")
def n9_literal_optimum():
    """N=9 optimum with gamma = 0.05 omega_max."""
    from ctapchain import ChainConfig, find_optimal_tmax
    c = ChainConfig.from_pi_units(9, 29.1, gamma_ratio=0.05)
    return find_optimal_tmax(c, (5 * PI, 60 * PI), 5 * PI)
