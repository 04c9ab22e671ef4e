import numpy as np
import pytest

from anisovisc.grid import make_grid, project_initial


@pytest.fixture
def square():
    return make_grid(-1, 1, -1, 1, 4, 4)


def riemann(u_l, u_r):
    return lambda x, y: np.where(y < 0, float(u_l), float(u_r)) + 0 * x


@pytest.fixture
def riemann_field():
    """x-independent 1|0 jump at y = 0 on (-1, 1) x (-4, 4)."""
    grid = make_grid(-1, 1, -4, 4, 8, 256)
    return project_initial(riemann(1.0, 0.0), grid)
