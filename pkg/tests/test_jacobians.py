import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finslervol.ellipsoids import SolverError, john, lowner, mvee_symmetric
from finslervol.jacobians import (
    BUSEMANN,
    CIRCUMSCRIBED_RIEMANNIAN,
    HOLMES_THOMPSON,
    INSCRIBED_RIEMANNIAN,
    MASS_STAR,
    JacobianKind,
    check_axioms,
    generic_sigma,
    jacobian,
    normalization_identity,
)
from finslervol.norms import (
    Ellipsoidal,
    LpNorm,
    PolytopeVertices,
    euclidean,
    l1,
    linf,
    pullback,
    random_bijection,
    random_ellipsoid,
    random_exact_norm,
    random_polytope,
    unit_ball_volume,
)


# -------------------------------------------------------------------------- oracles


def _max_det_entries_in_unit_box(n, levels):
    """max |det F| over matrices with entries on a grid in [-1, 1]."""
    best = 0.0
    for entries in itertools.product(levels, repeat=n * n):
        best = max(best, abs(np.linalg.det(np.reshape(entries, (n, n)))))
    return best


def _max_area_ellipse_in_diamond(steps=81):
    """Grid over Q = P^{-1}; the ellipse x^T P x <= 1 fits iff Q11 + Q22 +- 2 Q12 <= 1."""
    best = 0.0
    g = np.linspace(0, 1, steps)
    for a, c in itertools.product(g, g):
        for b in np.linspace(-0.5, 0.5, steps):
            if a + c + 2 * abs(b) <= 1 + 1e-12 and a * c - b * b > 0:
                best = max(best, math.pi * math.sqrt(a * c - b * b))
    return best


def test_golden_mass_star_l1():
    # F(B_l1) in B_linf means every column of F lies in [-1, 1]^2
    oracle = _max_det_entries_in_unit_box(2, np.linspace(-1, 1, 9))
    assert oracle == pytest.approx(2.0)
    r = jacobian(MASS_STAR, l1(2))
    assert r.value == pytest.approx(oracle, abs=1e-6)
    assert r.certificate <= 1e-8


def test_mass_star_l1_in_three_dimensions():
    # columns in [-1, 1]^3: the maximum sits on a +-1 matrix (Hadamard bound for n=3 is 4)
    oracle = _max_det_entries_in_unit_box(3, (-1.0, 1.0))
    assert oracle == pytest.approx(4.0)
    assert jacobian(MASS_STAR, l1(3)).value == pytest.approx(oracle, abs=1e-6)


def test_golden_circumscribed_l1():
    # ellipses x^T P x <= 1 through +-e1, +-e2 need P11, P22 <= 1 so det P <= 1
    assert jacobian(CIRCUMSCRIBED_RIEMANNIAN, l1(2)).value == pytest.approx(1.0, abs=1e-6)


def test_golden_busemann_linf():
    assert jacobian(BUSEMANN, linf(2)).value == pytest.approx(math.pi / 4, abs=1e-12)


def test_golden_inscribed_l1():
    oracle = _max_area_ellipse_in_diamond() / math.pi
    assert oracle == pytest.approx(0.5, abs=1e-3)
    assert jacobian(INSCRIBED_RIEMANNIAN, l1(2)).value == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize(
    "kind, norm, expected",
    [
        (HOLMES_THOMPSON, l1(2), 4 / math.pi),  # Leb(square) / pi
        (BUSEMANN, l1(3), math.pi),  # omega_3 / (4/3)
        (MASS_STAR, euclidean(2), 1.0),  # rows of F in the unit disk: Hadamard
        (CIRCUMSCRIBED_RIEMANNIAN, linf(2), 0.5),  # Löwner disk of the square has radius sqrt 2
        (CIRCUMSCRIBED_RIEMANNIAN, linf(3), 3 ** -1.5),
        (INSCRIBED_RIEMANNIAN, linf(2), 1.0),
    ],
)
def test_closed_forms(kind, norm, expected):
    assert jacobian(kind, norm).value == pytest.approx(expected, rel=1e-7)


def test_degenerate_input_gives_zero():
    s = Ellipsoidal(np.diag([1.0, 0.0]))
    for kind in (BUSEMANN, HOLMES_THOMPSON, INSCRIBED_RIEMANNIAN, CIRCUMSCRIBED_RIEMANNIAN, MASS_STAR):
        assert jacobian(kind, s).value == 0.0


def test_sigma_must_be_a_norm():
    with pytest.raises(ValueError):
        generic_sigma(Ellipsoidal(np.diag([1.0, 0.0])))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        jacobian(generic_sigma(linf(3)), l1(2))


def test_kind_parse_roundtrip():
    for k in (BUSEMANN, HOLMES_THOMPSON, INSCRIBED_RIEMANNIAN, CIRCUMSCRIBED_RIEMANNIAN, MASS_STAR):
        assert JacobianKind.parse(k.name).kind is k.kind


def test_result_json_shape():
    d = jacobian(MASS_STAR, l1(2)).to_json()
    assert {"value", "F", "certificate", "certified"} <= set(d)


def test_scaling_examples():
    # unimodular invariance and J(2 s) = 2^n J(s)
    s = euclidean(2)
    assert jacobian(BUSEMANN, pullback(s, np.diag([3.0, 1 / 3]))).value == pytest.approx(
        jacobian(BUSEMANN, s).value, rel=1e-9)
    assert jacobian(CIRCUMSCRIBED_RIEMANNIAN, pullback(s, 2 * np.eye(2))).value == pytest.approx(4.0, rel=1e-9)


def test_generic_ascent_matches_closed_route(rng):
    for _ in range(3):
        sigma = random_polytope(2, rng)
        s = random_ellipsoid(2, rng)
        auto = jacobian(generic_sigma(sigma), s).value
        direct = jacobian(generic_sigma(sigma), s, method="direct").value
        assert direct <= auto * (1 + 1e-6)
        assert direct == pytest.approx(auto, rel=1e-4)


@pytest.mark.parametrize("sigma", [l1(2), linf(2), euclidean(2), l1(3), linf(3)])
def test_normalization_identity(sigma):
    lhs, rhs, res = normalization_identity(sigma)
    assert res <= 1e-4


def test_normalization_examples():
    assert normalization_identity(linf(2))[1] == pytest.approx(1.0, abs=1e-6)
    assert normalization_identity(l1(2))[1] == pytest.approx(0.5, abs=1e-6)


# -------------------------------------------------------------------------- ellipsoids


def test_lowner_of_square_is_disk_of_radius_sqrt2():
    fit = lowner(linf(2))
    np.testing.assert_allclose(fit.P, np.eye(2) / 2, atol=1e-8)


def test_john_of_diamond():
    fit = john(l1(2))
    np.testing.assert_allclose(fit.P, 2 * np.eye(2), atol=1e-8)


def test_mvee_near_duplicate_points():
    # a sliver edge: coordinate ascent alone stalls here
    X = np.array([[0.44457712, 0.55097651], [0.77824476, -0.62795211], [0.77824042, -0.62795834]])
    P, gap, _ = mvee_symmetric(X)
    g = np.einsum("ij,jk,ik->i", X, P, X)
    assert g.max() <= 1 + 1e-12
    assert gap <= 1e-9


def test_mvee_iteration_cap_is_explicit():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [0.7, 0.7]])
    with pytest.raises(SolverError):
        mvee_symmetric(X, tol=1e-15, max_iter=1)


# -------------------------------------------------------------------------- axioms


@pytest.mark.parametrize("kind", [BUSEMANN, HOLMES_THOMPSON, CIRCUMSCRIBED_RIEMANNIAN, MASS_STAR],
                         ids=lambda k: k.name)
def test_axioms_hold_for_sigma_family_and_volume_jacobians(kind, rng):
    samples = [(random_exact_norm(2, rng), random_bijection(2, rng)) for _ in range(15)]
    rep = check_axioms(kind, samples)
    assert rep.max_transformation_residual <= 1e-6
    assert rep.monotonicity_violations == 0


def test_inscribed_convention_scales_inversely():
    # Leb(John)/omega_n scales like 1/|det L|, the opposite of the transformation law
    s = l1(2)
    L = 2 * np.eye(2)
    j, jl = (jacobian(INSCRIBED_RIEMANNIAN, x).value for x in (s, pullback(s, L)))
    assert jl == pytest.approx(j / 4, rel=1e-8)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_transformation_law_property(seed):
    rng = np.random.default_rng(seed)
    s, L = random_exact_norm(2, rng), random_bijection(2, rng, cond=100)
    for kind in (BUSEMANN, CIRCUMSCRIBED_RIEMANNIAN, MASS_STAR):
        j = jacobian(kind, s).value
        assert jacobian(kind, pullback(s, L)).value == pytest.approx(j * abs(np.linalg.det(L)), rel=1e-6)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_sigma_jacobian_bounded_by_volume_ratio(seed):
    # F(B_s) in B_sigma gives |det F| Leb(B_s) <= Leb(B_sigma)
    rng = np.random.default_rng(seed)
    s, sigma = random_exact_norm(2, rng), random_exact_norm(2, rng)
    j = jacobian(generic_sigma(sigma), s).value
    assert j <= unit_ball_volume(sigma).value / unit_ball_volume(s).value * (1 + 1e-9)


def test_lp_scales_convention():
    s = LpNorm(math.inf, np.array([2.0, 1.0]))  # ball [-2, 2] x [-1, 1]
    assert jacobian(BUSEMANN, s).value == pytest.approx(math.pi / 8)


def test_vertex_input_is_symmetrized():
    s = PolytopeVertices(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert jacobian(CIRCUMSCRIBED_RIEMANNIAN, s).value == pytest.approx(1.0, abs=1e-8)
