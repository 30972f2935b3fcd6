import numpy as np
import pytest

from nonlocal_logistic import (
    CoefficientSpec,
    DomainSpec,
    InitialSpec,
    build_coefficient,
    build_grid,
    build_initial,
    make_params,
)

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def grid1d():
    return build_grid(DomainSpec(dim=1, extent=1.0, n=63))


@pytest.fixture
def grid2d():
    return build_grid(DomainSpec(dim=2, extent=(1.0, 1.5), n=(11, 15)))


@pytest.fixture
def bump_problem():
    """p=3 with a Gaussian coefficient and a tilted sine datum on 64 cells."""
    grid = build_grid(DomainSpec(dim=1, extent=1.0, n=63))
    a = build_coefficient(CoefficientSpec("gaussian-bump", 1.0, (0.5,), 0.1), grid)
    params = make_params(grid, 3.0, a)
    g = build_initial(InitialSpec("sine-mode", tilt=0.8), grid)
    return grid, params, g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
