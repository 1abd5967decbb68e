import numpy as np
import pytest

from fracsiv.siv import Grid, SivParams

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def params():
    return SivParams(mu=0.01, beta=0.3, gamma=0.1, theta=0.3, nu=0.1)


def smooth_field(grid: Grid, rng, modes: int = 3) -> np.ndarray:
    """Random combination of low sine modes; vanishes on the boundary."""
    X, Y = grid.mesh()
    Lx, Ly = grid.xh - grid.xl, grid.yh - grid.yl
    f = np.zeros(grid.shape)
    for m in range(1, modes + 1):
        for n in range(1, modes + 1):
            c = rng.normal() / (m * n)
            f += c * np.sin(m * np.pi * (X - grid.xl) / Lx) * np.sin(n * np.pi * (Y - grid.yl) / Ly)
    f[0, :] = f[-1, :] = f[:, 0] = f[:, -1] = 0.0
    return f
