import math

import numpy as np
import pytest

from dhym.grid import make_grid, sample_function


SQRT3 = math.sqrt(3.0)


def random_hermitian(rng, n, count=1, scale=3.0):
    """Stack of Hermitian matrices with entries in [-scale, scale]."""
    re = rng.uniform(-scale, scale, size=(count, n, n))
    im = rng.uniform(-scale, scale, size=(count, n, n))
    U = re + 1j * im
    return 0.5 * (U + np.conj(np.swapaxes(U, -1, -2)))


def bump1(x):
    return (1.0 - x * x) ** 2


@pytest.fixture
def grid1():
    return make_grid(1, [-1, -1], [1, 1], [17, 17])


@pytest.fixture
def grid2():
    return make_grid(2, [-1] * 4, [1] * 4, [9] * 4)


@pytest.fixture
def quad_sqrt3_2d(grid2):
    """The exactly stationary potential for hat_theta = pi/3 in n = 2."""
    return sample_function(
        grid2,
        lambda x1, y1, x2, y2: SQRT3 * (x1 * x1 + y1 * y1 + x2 * x2 + y2 * y2),
    )
