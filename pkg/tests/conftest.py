import numpy as np
import pytest

from matschro import analyze_threshold, build_power_nls_potential, make_grid
from matschro.decay import free_calibration

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cubic_grid():
    return make_grid(20.0, 1024)


@pytest.fixture(scope="session")
def cubic_threshold(cubic_grid):
    V = build_power_nls_potential(cubic_grid, 1.0)
    result, fp = analyze_threshold(V)
    return result, fp


@pytest.fixture(scope="session")
def quintic_threshold(cubic_grid):
    V = build_power_nls_potential(cubic_grid, 2.0)
    return analyze_threshold(V)


@pytest.fixture(scope="session")
def wide_grid():
    """Grid on which sech-type fields are decayed to roundoff at the ends."""
    return make_grid(40.0, 1024)


@pytest.fixture(scope="session")
def big_grid():
    return make_grid(400.0, 8192)


@pytest.fixture(scope="session")
def free_run(big_grid):
    return free_calibration(big_grid)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per criterion and assert it."""
    def report(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        assert ok, line
    return report


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
