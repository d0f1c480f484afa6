import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finslervol.norms import (
    DegenerateNormError,
    Ellipsoidal,
    LpNorm,
    PolytopeFacets,
    PolytopeVertices,
    direction_grid,
    euclidean,
    evaluate,
    l1,
    linf,
    op_norm,
    polar,
    pullback,
    random_bijection,
    random_exact_norm,
    unit_ball_volume,
)

CROSS = PolytopeVertices(np.array([[1.0, 0.0], [0.0, 1.0]]))


def test_evaluate_examples():
    assert evaluate(euclidean(2), [3, 4]) == pytest.approx(5.0, abs=1e-15)
    assert evaluate(l1(2), [1, -1]) == pytest.approx(2.0, abs=1e-15)
    # gauge of the cross-polytope equals the l1 norm
    assert evaluate(CROSS, [0.5, 0.5]) == pytest.approx(1.0, abs=1e-9)


def test_vertex_gauge_matches_l1_everywhere(rng):
    X = rng.normal(size=(50, 2))
    np.testing.assert_allclose(CROSS(X), np.abs(X).sum(axis=1), rtol=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        euclidean(2)([1.0, 2.0, 3.0])


@pytest.mark.parametrize(
    "norm, expected, method",
    [
        (euclidean(2), math.pi, "exact_ellipsoid"),
        (linf(2), 4.0, "exact_polytope"),
        (l1(3), 4.0 / 3.0, "exact_polytope"),  # 2^n / n!
        (Ellipsoidal(np.diag([4.0, 1.0])), math.pi / 2, "exact_ellipsoid"),
    ],
)
def test_unit_ball_volume(norm, expected, method):
    v = unit_ball_volume(norm)
    assert v.method == method
    assert v.value == pytest.approx(expected, rel=1e-12)


def test_quadrature_volume_reports_error():
    s = LpNorm(3.0, np.ones(2))  # no exact route
    v = unit_ball_volume(s)
    # closed form 4 Gamma(1+1/p)^2 / Gamma(1+2/p)
    exact = 4 * math.gamma(1 + 1 / 3) ** 2 / math.gamma(1 + 2 / 3)
    assert v.method == "quadrature"
    assert abs(v.value - exact) <= v.error_bound


def test_degenerate_volume_raises():
    with pytest.raises(DegenerateNormError):
        unit_ball_volume(Ellipsoidal(np.diag([1.0, 0.0])))


def test_polar_examples():
    p = polar(euclidean(3))
    np.testing.assert_allclose(p.Q, np.eye(3))
    U = direction_grid(2)
    np.testing.assert_allclose(polar(l1(2))(U), linf(2)(U), rtol=1e-12)
    np.testing.assert_allclose(polar(Ellipsoidal(np.diag([4.0, 1.0]))).Q, np.diag([0.25, 1.0]))


def test_pullback_examples():
    assert pullback(euclidean(2), np.eye(2))([0.6, 0.8]) == pytest.approx(1.0)
    assert pullback(euclidean(2), 2 * np.eye(2))([1.0, 0.0]) == pytest.approx(2.0)
    c = math.cos(math.pi / 4)
    R = np.array([[c, -c], [c, c]])
    # oracle: max(|<r1, x>|, |<r2, x>|) at x = e1
    assert pullback(linf(2), R)([1.0, 0.0]) == pytest.approx(max(abs(R[0, 0]), abs(R[1, 0])), abs=1e-15)


def test_facets_and_vertices_agree():
    square = PolytopeFacets(np.eye(2))
    U = direction_grid(2)
    np.testing.assert_allclose(square(U), linf(2)(U), rtol=1e-12)
    np.testing.assert_allclose(polar(square)(U), l1(2)(U), rtol=1e-12)


def test_op_norm_l1_to_linf():
    # columns are images of the l1 vertices
    A = np.array([[1.0, -2.0], [0.5, 0.25]])
    assert op_norm(A, l1(2), linf(2)) == pytest.approx(2.0)


# -------------------------------------------------------------------------- properties

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_change_of_variables(seed):
    rng = np.random.default_rng(seed)
    s = random_exact_norm(2, rng)
    L = random_bijection(2, rng, cond=50)
    lhs = unit_ball_volume(pullback(s, L))
    rhs = unit_ball_volume(s)
    tol = lhs.error_bound * abs(np.linalg.det(L)) + rhs.error_bound + 1e-9 * rhs.value
    assert abs(lhs.value * abs(np.linalg.det(L)) - rhs.value) <= tol


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(min_value=2, max_value=3))
def test_polar_involution(seed, n):
    s = random_exact_norm(n, np.random.default_rng(seed))
    U = direction_grid(n)
    np.testing.assert_allclose(polar(polar(s))(U), s(U), rtol=1e-9)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_triangle_inequality_and_homogeneity(seed):
    rng = np.random.default_rng(seed)
    s = random_exact_norm(3, rng)
    x, y = rng.normal(size=(2, 3))
    assert s(x + y) <= s(x) + s(y) + 1e-12
    assert s(-2.5 * x) == pytest.approx(2.5 * s(x), rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_gauge_ball_consistency(seed):
    rng = np.random.default_rng(seed)
    s = random_exact_norm(2, rng)
    U = direction_grid(2, 90)
    boundary = U / s(U)[:, None]
    assert np.all(s(0.999 * boundary) <= 1.0)
    assert np.all(s(1.001 * boundary) > 1.0)
