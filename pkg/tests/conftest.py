import math

import numpy as np
import pytest

from mlab.phasespace import gaussian_state, make_grid

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ring_grid():
    """Four-cell kicked-rotor ring, commensurate for hbar = 5 (r = 2)."""
    return make_grid(512, 256, -4 * math.pi, 4 * math.pi, -80, 80, "periodic_x")


@pytest.fixture
def box_grid():
    return make_grid(128, 128, -8, 8, -8, 8)


@pytest.fixture
def qdkr_wigner(ring_grid):
    return gaussian_state(ring_grid, 0, 0, 2.5, 1.0, kind="wigner", hbar=5.0)
