import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fracobstacle.grid import FracParams, SpaceGrid, TimeGrid
from fracobstacle.harness import benchmark_obstacle
from fracobstacle.solver import SolverConfig, solve_lcp, solve_penalized

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def benchmark_problem(n_x=1024, n_t=256, s=0.75, half_width=4.5, t_final=1.0):
    sg = SpaceGrid.symmetric(half_width, n_x)
    tg = TimeGrid(t_final, n_t)
    obs = benchmark_obstacle(window=(-3 * half_width, 3 * half_width))
    return obs, FracParams(s), sg, tg


@pytest.fixture(scope="session")
def small_benchmark():
    """LCP and penalized solves of the benchmark at a coarse resolution."""
    obs, p, sg, tg = benchmark_problem(256, 64)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        lcp = solve_lcp(obs, p, sg, tg)
        pen = solve_penalized(obs, p, sg, tg, SolverConfig(eps_pen=1e-3))
    return obs, p, sg, tg, lcp, pen


@pytest.fixture(scope="session")
def benchmark_lcp_512():
    obs, p, sg, tg = benchmark_problem(512, 128)
    return obs, p, sg, tg, solve_lcp(obs, p, sg, tg)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20261014)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
