import pytest

from mwgrav.grid import make_grid
from mwgrav.sequences import Experiment

# Fast tier: same box as production, coarser lattice, shorter interferometer.
FAST_T_PI = 20.0


@pytest.fixture(scope="session")
def fast_grid():
    return make_grid(2048, -512.0, 768.0)


@pytest.fixture(scope="session")
def fast_exp(fast_grid):
    return Experiment(grid=fast_grid, t_pi=FAST_T_PI)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: int(k)):
        terminalreporter.write_line(RESULTS[key])
