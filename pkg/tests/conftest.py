import math

import numpy as np
import pytest

from hartree5d.grid import RadialField, build_grid
from hartree5d.ground_state import SolverParams, solve_ground_state

# filled by test_acceptance, printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def gs():
    """Ground state on the reference grid n=4096, r_max=30."""
    return solve_ground_state(build_grid(4096, 30.0), SolverParams())


@pytest.fixture(scope="session")
def gs_wide():
    """Same spacing class on a 40-box, for runs that spread out to t=4."""
    return solve_ground_state(build_grid(4096, 40.0), SolverParams())


def ball_indicator(n=4097, r_max=4.0):
    """sqrt of the indicator of the unit ball, with density 1/2 on the jump node."""
    g = build_grid(n, r_max)
    r = np.asarray(g.nodes)
    rho = np.where(r < 1, 1.0, 0.0)
    rho[np.isclose(r, 1.0)] = 0.5
    return RadialField(g, np.sqrt(rho))


def gaussian(grid, width=1.0, amplitude=1.0, chirp=0.0):
    r = np.asarray(grid.nodes)
    s = amplitude * np.exp(-0.5 * (r / width) ** 2 + 1j * chirp * r * r)
    s[-1] = 0.0
    return RadialField(grid, s)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


PI52 = math.pi**2.5
