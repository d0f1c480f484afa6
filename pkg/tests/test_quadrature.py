import numpy as np
import pytest

from finslervol.quadrature import (
    Ball,
    Box,
    BoxRegion,
    Complement,
    Everything,
    cell_labels,
    midpoint_grid,
    richardson,
)


def test_midpoint_grid_weights():
    P, w = midpoint_grid(Box([0, 0], [2, 1]), 4)
    assert P.shape == (16, 2)
    assert w * len(P) == pytest.approx(2.0)


def test_midpoint_exact_for_linear_integrand():
    P, w = midpoint_grid(Box.unit(2), 3)
    assert (P[:, 0] + 2 * P[:, 1]).sum() * w == pytest.approx(1.5)


def test_richardson_removes_second_order_term():
    def mid(N):
        P, w = midpoint_grid(Box.unit(1), N)
        return float((P[:, 0] ** 2).sum() * w)

    value, err = richardson(mid(16), mid(8))
    assert value == pytest.approx(1 / 3, abs=1e-14)
    fine, err = richardson(mid(16), mid(8), smooth=False)
    assert fine == mid(16) and err > 0


def test_region_algebra():
    P = np.array([[0.1, 0.1], [0.9, 0.9], [2.0, 2.0]])
    half = BoxRegion((Box([0, 0], [0.5, 1]),))
    np.testing.assert_array_equal(half.contains(P), [True, False, False])
    np.testing.assert_array_equal((~half).contains(P), [False, True, True])
    disk = Ball(np.zeros(2), 1.0)
    np.testing.assert_array_equal((half | disk).contains(P), [True, False, False])
    np.testing.assert_array_equal((Everything() & Complement(disk)).contains(P), [False, True, True])


def test_box_validation():
    with pytest.raises(ValueError):
        Box([0, 1], [1, 1])


def test_cell_labels_blocks():
    labels = cell_labels(Box.unit(2), 4, 2)
    assert sorted(np.bincount(labels)) == [4, 4, 4, 4]
