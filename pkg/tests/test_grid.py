import math

import numpy as np
import pytest

from dhym.errors import GridError
from dhym.grid import (
    NodeClass,
    ScalarField,
    boundary_mask,
    classify_nodes,
    integrate_interior,
    make_grid,
    pairwise_sum,
    sample_function,
)


def test_make_grid_basic():
    g = make_grid(1, [-1, -1], [1, 1], [9, 9])
    assert g.dim == 2
    assert g.h == pytest.approx(0.25)
    assert g.shape == (9, 9)
    assert g.interior_shape == (7, 7)
    assert g.num_nodes == 81
    assert g.num_interior == 49
    assert g.cell_volume == pytest.approx(0.0625)
    assert np.allclose(g.axis_coords(0), -1 + 0.25 * np.arange(9))


def test_make_grid_rejects_too_few_points():
    with pytest.raises(GridError, match="at least 5"):
        make_grid(1, [-1, -1], [1, 1], [4, 9])


def test_make_grid_rejects_degenerate_box():
    with pytest.raises(GridError, match="degenerate"):
        make_grid(1, [-1, 1], [1, 1], [9, 9])


def test_make_grid_rejects_anisotropy():
    with pytest.raises(GridError, match="isotropic"):
        make_grid(1, [-1, -1], [1, 2], [9, 9])


def test_make_grid_rejects_wrong_lengths():
    with pytest.raises(GridError, match="2n = 4"):
        make_grid(2, [-1, -1], [1, 1], [9, 9])


def test_classify_nodes_box():
    g = make_grid(1, [-1, -1], [1, 1], [5, 5])
    labels = classify_nodes(g)
    assert labels[0, 0] == NodeClass.BOUNDARY_LAYER
    assert labels[2, 2] == NodeClass.INTERIOR
    assert np.sum(labels == NodeClass.INTERIOR) == 9
    # a box with one ghost ring never needs the excluded tag
    assert not np.any(labels == NodeClass.GHOST_EXCLUDED)
    mask = boundary_mask(g)
    assert np.array_equal(mask, labels == NodeClass.BOUNDARY_LAYER)


def test_pairwise_sum_matches_fsum():
    rng = np.random.default_rng(7)
    for size in (1, 2, 3, 64, 1000, 4097):
        vals = rng.standard_normal(size) * 10.0 ** rng.integers(-8, 8, size)
        got = pairwise_sum(vals)
        want = math.fsum(vals)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_pairwise_sum_is_order_deterministic():
    rng = np.random.default_rng(11)
    vals = rng.standard_normal(12345)
    assert pairwise_sum(vals) == pairwise_sum(vals.copy())
    # differs in general from left-to-right accumulation, which is the point
    assert pairwise_sum(vals) == pairwise_sum(np.ascontiguousarray(vals))


def test_pairwise_sum_complex_and_empty():
    assert pairwise_sum(np.array([], dtype=np.float64)) == 0.0
    z = np.array([1 + 2j, 3 - 1j, -4 + 0.5j])
    assert pairwise_sum(z) == pytest.approx((1 + 2j) + (3 - 1j) + (-4 + 0.5j))


def test_integrate_interior_polynomial():
    # midpoint-type sum over the interior is exact for constants
    g = make_grid(1, [-1, -1], [1, 1], [17, 17])
    ones = ScalarField(g, np.ones(g.shape))
    assert integrate_interior(ones) == pytest.approx(g.num_interior * g.cell_volume)
    # and matches a direct weighted sum for a generic field
    f = sample_function(g, lambda x, y: np.sin(x) * np.cosh(y))
    direct = float(np.sum(f.values[1:-1, 1:-1])) * g.h**2
    assert integrate_interior(f) == pytest.approx(direct, rel=1e-13)


def test_integrate_interior_weight_grid_mismatch():
    g = make_grid(1, [-1, -1], [1, 1], [17, 17])
    other = make_grid(1, [-1, -1], [1, 1], [9, 9])
    f = ScalarField(g, np.ones(g.shape))
    w = ScalarField(other, np.ones(other.shape))
    with pytest.raises(GridError, match="different grid"):
        integrate_interior(f, w)


def test_sample_function_rejects_nonfinite():
    g = make_grid(1, [0.5, 0.5], [1.5, 1.5], [9, 9])
    with np.errstate(divide="ignore", invalid="ignore"):
        with pytest.raises(GridError, match="non-finite"):
            sample_function(g, lambda x, y: np.log(x - 1.0))


def test_scalar_field_shape_check():
    g = make_grid(1, [-1, -1], [1, 1], [9, 9])
    with pytest.raises(GridError, match="does not match"):
        ScalarField(g, np.zeros((9, 8)))
