import math

import numpy as np
import pytest

from finslervol.finsler import Atlas, Chart, chart_independence, finsler_volume, linear_chart
from finslervol.jacobians import BUSEMANN, CIRCUMSCRIBED_RIEMANNIAN, HOLMES_THOMPSON, MASS_STAR
from finslervol.metric_diff import LipschitzMap, affine_map, polynomial_map
from finslervol.norms import Ellipsoidal, euclidean, linf
from finslervol.quadrature import Ball, Box, boxes


def square(norm, A=None):
    return Atlas((linear_chart(np.eye(2) if A is None else A, target_norm=norm),))


def test_unit_square_in_linf():
    assert finsler_volume(square(linf(2)), MASS_STAR).value == pytest.approx(1.0, rel=1e-12)
    assert finsler_volume(square(linf(2)), BUSEMANN).value == pytest.approx(math.pi / 4, rel=1e-12)
    assert finsler_volume(square(linf(2)), HOLMES_THOMPSON).value == pytest.approx(2 / math.pi, rel=1e-12)


def test_scaled_square_euclidean():
    v = finsler_volume(square(euclidean(2), 3 * np.eye(2)), CIRCUMSCRIBED_RIEMANNIAN)
    assert v.value == pytest.approx(9.0, rel=1e-12)


def test_restriction_to_region():
    full = finsler_volume(square(euclidean(2)), BUSEMANN)
    half = finsler_volume(square(euclidean(2)), BUSEMANN, A=boxes(([0, 0], [0.5, 1])))
    assert half.value == pytest.approx(full.value / 2, rel=1e-12)
    none = finsler_volume(square(euclidean(2)), BUSEMANN, A=boxes(([5, 5], [6, 6])))
    assert none.value == 0.0


def test_reparametrization_invariance():
    N = Ellipsoidal(np.array([[2.0, 0.3], [0.3, 1.0]]))
    a = square(N)
    # x -> x^2 on [0, 1] is a bi-Lipschitz reparametrization away from 0; use [0.2, 1]
    b_map = polynomial_map([[(1, [2, 0])], [(1, [0, 1])]], 2, N)
    b = Atlas((Chart(Box([math.sqrt(0.2), 0], [1, 1]), b_map),))
    vb = finsler_volume(b, CIRCUMSCRIBED_RIEMANNIAN, quad=64)
    # image [0.2, 1] x [0, 1] has Lebesgue area 0.8; J^cr(N) = sqrt(det Q)
    assert vb.value == pytest.approx(0.8 * math.sqrt(np.linalg.det(N.Q)), rel=1e-6)
    # the same strip as a linear chart
    strip = Atlas((linear_chart(np.diag([0.8, 1.0]), target_norm=N, b=np.array([0.2, 0.0])),))
    res, _, _ = chart_independence(strip, b, CIRCUMSCRIBED_RIEMANNIAN, quad=64)
    assert res <= 1e-6
    assert finsler_volume(a, CIRCUMSCRIBED_RIEMANNIAN).value > vb.value


def test_disk_with_indicator():
    disk = Atlas((Chart(Box([-1, -1], [1, 1]), affine_map(np.eye(2), target_norm=euclidean(2)),
                        indicator=Ball(np.zeros(2), 1.0)),))
    v = finsler_volume(disk, BUSEMANN, quad=256)
    assert v.value == pytest.approx(math.pi, rel=1e-3)
    assert v.error > 0


def test_position_dependent_norm():
    # Riemannian metric diag(1 + x, 1): Busemann volume = integral of sqrt(1 + x)
    f = LipschitzMap(2, 2, lambda P: P, lambda x: Ellipsoidal(np.diag([1 + x[0], 1.0])))
    v = finsler_volume(Atlas((Chart(Box.unit(2), f),)), BUSEMANN, quad=32)
    assert v.value == pytest.approx((2 / 3) * (2**1.5 - 1), rel=1e-5)


def test_chart_validation():
    f = affine_map(np.eye(2))
    with pytest.raises(ValueError):
        Chart(Box.unit(2), f, bilip=(2.0, 1.0))
    with pytest.raises(ValueError):
        Chart(Box.unit(3), f)
    with pytest.raises(ValueError):
        Atlas(())


def test_json_shape():
    d = finsler_volume(square(euclidean(2)), BUSEMANN).to_json()
    assert set(d) == {"value", "error_bound", "per_chart"}
