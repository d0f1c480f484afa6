import math

import numpy as np
import pytest

from finslervol.metric_diff import (
    LipschitzMap,
    affine_map,
    area_formula_check,
    identity_map,
    jacobian_matrices,
    metric_differential,
    polynomial_map,
)
from finslervol.norms import direction_grid, euclidean, l1, linf
from finslervol.quadrature import Box


def test_linear_map_differential_is_the_pullback():
    A = np.array([[1.0, 2.0], [0.0, 3.0], [1.0, -1.0]])
    f = affine_map(A, target_norm=linf(3))
    md = metric_differential(f, [0.3, 0.4])
    U = direction_grid(2)
    np.testing.assert_allclose(md.seminorm(U), np.abs(U @ A.T).max(axis=1), rtol=1e-12)


def test_polynomial_differential_matches_calculus():
    # f(x, y) = (x^2 y, x + y^3)
    f = polynomial_map([[(1, [2, 1])], [(1, [1, 0]), (1, [0, 3])]], 2, euclidean(2))
    p = np.array([0.7, -0.4])
    D = jacobian_matrices(f, p[None], 1e-5)[0]
    exact = np.array([[2 * p[0] * p[1], p[0] ** 2], [1.0, 3 * p[1] ** 2]])
    np.testing.assert_allclose(D, exact, atol=1e-9)


def test_metric_only_target():
    # R^2 -> R^2 with the l1 metric given only as a distance function
    f = LipschitzMap(2, 2, lambda P: 2 * P, None, metric=lambda a, b: float(np.abs(a - b).sum()))
    md = metric_differential(f, [0.5, 0.5], 1e-4, grid=720)
    U = direction_grid(2, 720)
    # tabulated gauge: the grid misses the l1 vertices by half a step
    np.testing.assert_allclose(md.seminorm(U), 2 * np.abs(U).sum(axis=1), rtol=5e-3)


def test_boundary_point_rejected():
    with pytest.raises(ValueError):
        metric_differential(identity_map(2, euclidean(2)), [0.0, 0.5], domain=Box.unit(2))


def test_nonfinite_rejected():
    f = LipschitzMap(1, 1, lambda P: np.where(P > 0, P, np.nan), euclidean(1))
    with pytest.raises(ValueError):
        jacobian_matrices(f, np.array([[0.0]]), 1e-3)


def test_area_formula_square_scaling():
    f = affine_map(2 * np.eye(2), target_norm=euclidean(2))
    lhs, rhs, res = area_formula_check(f, Box.unit(2))
    assert lhs == pytest.approx(4.0, rel=1e-12)
    assert res <= 1e-12


def test_area_formula_embedded_plane_in_l1():
    # graph plane z = x + y in l1^3: both sides against a closed form
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    f = affine_map(A, target_norm=l1(3))
    lhs, rhs, res = area_formula_check(f, Box.unit(2), quad=8)
    assert res <= 1e-9
    # the l1 ball pulled back by A is the polygon |x| + |y| + |x + y| <= 1: a hexagon of area 3/4
    assert lhs == pytest.approx(math.pi / 0.75, rel=1e-9)


def test_compose_keeps_linearity():
    f = affine_map(np.array([[1.0, 1.0]]), np.array([1.0]))
    g = affine_map(np.array([[2.0, 0.0], [0.0, 3.0]]))
    h = f.compose(g)
    assert h.is_linear
    np.testing.assert_allclose(h([1.0, 1.0]), [6.0])
