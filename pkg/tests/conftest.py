import math

import numpy as np
import pytest

from slab_soliton.closed_forms import BarrierParams, SlabParams
from slab_soliton.grid import build_grid
from slab_soliton.solver import SolverConfig, solve


@pytest.fixture(scope="session")
def slab_pi3():
    return SlabParams(2, math.pi / 3)


@pytest.fixture(scope="session")
def sol_R2(slab_pi3):
    """Small converged solve reused across modules (n=2, theta=pi/3, R=2, 65^2)."""
    bp = BarrierParams(slab_pi3, 2.0)
    return solve(bp, build_grid(bp, 65, 65), SolverConfig())


@pytest.fixture(scope="session")
def sol_R5(slab_pi3):
    bp = BarrierParams(slab_pi3, 5.0)
    return solve(bp, build_grid(bp, 65, 65), SolverConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in sorted(lines):
            terminalreporter.write_line(ln)
