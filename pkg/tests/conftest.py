import math

import numpy as np
import pytest

LABELS = ("00", "01", "10", "11")
THETA_GRID_50 = np.linspace(0.0, math.pi / 2, 50)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_complex_matrix(rng, shape=(2, 2)):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


# acceptance criteria record one line each here; printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
