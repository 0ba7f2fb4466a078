import math

import numpy as np
import pytest

from zklab.spectral import Grid2, RealField2


@pytest.fixture
def grid():
    return Grid2(32, 24, 2 * math.pi, 4 * math.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def random_field(grid, rng, band=None):
    """Random real field; ``band`` limits it to ``|j| <= band`` in both directions."""
    values = rng.standard_normal(grid.shape)
    if band is None:
        return RealField2(grid, values)
    modes = np.fft.fft2(values)
    keep = (np.abs(grid.jx) <= band)[:, None] & (np.abs(grid.jy) <= band)[None, :]
    return RealField2(grid, np.fft.ifft2(np.where(keep, modes, 0)).real)


def gaussian(grid, amplitude=1.0, width=1.0, x0=0.0, y0=0.0):
    X, Y = grid.mesh
    return RealField2(grid, amplitude * np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / width**2))


# one summary line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
