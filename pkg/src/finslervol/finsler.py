"""Finsler volumes of sets presented by finitely many bi-Lipschitz charts.

``mu(A) = sum_i  integral over K_i  of  1_A(phi_i(p)) * J(md_p phi_i) dp``,
evaluated by composite midpoint quadrature on each chart box.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import pmap
from .jacobians import Kind, JacobianKind, jacobian
from .metric_diff import LipschitzMap, affine_map, default_step, jacobian_matrices
from .norms import DEG_TOL, pullback
from .quadrature import Box, Region, default_resolution, midpoint_grid, richardson


@dataclass(frozen=True, eq=False)
class Chart:
    box: Box
    map: LipschitzMap
    indicator: Region | None = None  # K = box cut by this predicate
    bilip: tuple = (1.0, 1.0)

    def __post_init__(self):
        lo, hi = self.bilip
        if not (0 < lo <= hi):
            raise ValueError("bi-Lipschitz constants need 0 < lower <= upper")
        if self.box.dim != self.map.domain_dim:
            raise ValueError("chart box and map disagree on the dimension")

    @property
    def dim(self) -> int:
        return self.box.dim


@dataclass(frozen=True, eq=False)
class Atlas:
    charts: tuple

    def __post_init__(self):
        charts = tuple(self.charts)
        if not charts:
            raise ValueError("an atlas needs at least one chart")
        if len({c.map.target_dim for c in charts}) != 1 or len({c.dim for c in charts}) != 1:
            raise ValueError("all charts must share domain and target dimensions")
        object.__setattr__(self, "charts", charts)

    @property
    def dim(self) -> int:
        return self.charts[0].dim

    @property
    def target_dim(self) -> int:
        return self.charts[0].map.target_dim


@dataclass
class VolumeEstimate:
    value: float
    error: float
    per_chart: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"value": self.value, "error_bound": self.error, "per_chart": self.per_chart}


@dataclass
class ChartSample:
    """Quadrature data of one chart at one resolution."""

    P: np.ndarray  # parameter points
    w: float  # cell volume
    mask: np.ndarray  # inside K and phi^{-1}(A)
    D: np.ndarray  # differentials, (k, m, n)
    X: np.ndarray  # phi(P)
    h: float  # finite-difference step used for D


def sample_chart(chart: Chart, per_axis: int, A: Region | None = None) -> ChartSample:
    P, w = midpoint_grid(chart.box, per_axis)
    X = chart.map(P)
    mask = np.ones(len(P), dtype=bool)
    if chart.indicator is not None:
        mask &= chart.indicator.contains(P)
    if A is not None:
        mask &= A.contains(X)
    h = min(default_step(chart.box), 0.25 * float(np.min(chart.box.hi - chart.box.lo)) / per_axis)
    D = np.zeros((len(P), chart.map.target_dim, chart.dim))
    if mask.any():
        D[mask] = jacobian_matrices(chart.map, P[mask], h)
    return ChartSample(P, w, mask, D, X, h)


class JacobianField:
    """``p -> J(md_p phi)`` over a chart sample, with a per-differential cache.

    For a square chart with constant target norm ``N`` the transformation
    law gives ``J(N o D) = J(N) |det D|``, so one solve serves the whole
    chart.  The inscribed-Riemannian convention scales inversely with
    ``|det|`` and always goes through the cache instead.
    """

    def __init__(self, kind: JacobianKind, seed: int = 0, digits: int = 10):
        self.kind = kind
        self.seed = seed
        self.digits = digits
        self._cache: dict = {}

    def _solve(self, norm, D):
        return jacobian(self.kind, pullback(norm, D), seed=self.seed).value

    def values(self, chart: Chart, cs: ChartSample) -> np.ndarray:
        out = np.zeros(len(cs.P))
        idx = np.flatnonzero(cs.mask)
        if len(idx) == 0:
            return out
        f = chart.map
        m, n = f.target_dim, f.domain_dim
        if f.has_constant_norm and m == n and self.kind.kind is not Kind.INSCRIBED_RIEMANNIAN:
            base = jacobian(self.kind, f.target_norm, seed=self.seed).value
            dets = np.abs(np.linalg.det(cs.D[idx]))
            out[idx] = np.where(dets > DEG_TOL, base * dets, 0.0)
            return out
        scale = max(1.0, float(np.abs(cs.D[idx]).max()))
        keys = np.round(cs.D[idx].reshape(len(idx), -1) / scale, self.digits)
        if not f.has_constant_norm:
            keys = np.hstack([keys, np.round(cs.X[idx], self.digits)])
        for j, key in zip(idx, map(bytes, keys)):
            if key not in self._cache:
                try:
                    self._cache[key] = self._solve(f.norm_at(cs.X[j]), cs.D[j])
                except Exception as exc:  # attach the offending point
                    raise type(exc)(f"{exc} (at p={cs.P[j].tolist()})") from exc
            out[j] = self._cache[key]
        return out


def chart_integral(chart: Chart, weight, quad: int | None = None, A: Region | None = None,
                   smooth: bool | None = None):
    """Integrate ``weight(chart, sample) -> values`` on grids ``quad`` and ``quad/2``.

    Returns ``(value, error estimate)``.  Without indicators the integrand
    is smooth and the Richardson-extrapolated value is returned.
    """
    quad = quad or default_resolution(chart.dim)
    if quad < 2:
        raise ValueError("quadrature resolution must be at least 2")
    if smooth is None:
        smooth = chart.indicator is None and A is None
    vals = []
    for N in (quad, quad // 2):
        cs = sample_chart(chart, N, A)
        vals.append(float(np.sum(weight(chart, cs) * cs.mask) * cs.w))
    return richardson(vals[0], vals[1], smooth)


def weighted_volume(atlas: Atlas, kind: JacobianKind, A: Region | None = None, quad: int | None = None,
                    weights=None, smooth: bool | None = None, seed: int = 0) -> VolumeEstimate:
    """``sum_i  integral  w_i(p) J(md_p phi_i) 1_A(phi_i(p)) dp``.

    ``weights`` is an optional per-chart list of vectorized functions of
    the parameter ``p`` (the multiplicities of a current, in absolute value).
    """
    field_ = JacobianField(kind, seed)

    def one(i):
        chart = atlas.charts[i]
        wf = None if weights is None else weights[i]

        def weight(ch, cs):
            v = field_.values(ch, cs)
            return v if wf is None else v * wf(cs.P)

        return chart_integral(chart, weight, quad, A, smooth)

    parts = pmap(one, range(len(atlas.charts)))
    value = float(sum(v for v, _ in parts))
    err = float(sum(e for _, e in parts))
    return VolumeEstimate(value, err, [{"value": v, "error_bound": e} for v, e in parts])


def finsler_volume(atlas: Atlas, kind: JacobianKind, A: Region | None = None, quad: int | None = None,
                   seed: int = 0) -> VolumeEstimate:
    if kind.sigma is not None and kind.sigma.dim != atlas.dim:
        raise ValueError("sigma dimension differs from the chart dimension")
    return weighted_volume(atlas, kind, A, quad, seed=seed)


def chart_independence(atlas_a: Atlas, atlas_b: Atlas, kind: JacobianKind, A: Region | None = None,
                       quad: int | None = None):
    """Relative difference of the volumes of two presentations of one set.

    Returns ``(residual, volume_a, volume_b)``.
    """
    va = finsler_volume(atlas_a, kind, A, quad)
    vb = finsler_volume(atlas_b, kind, A, quad)
    scale = max(abs(va.value), abs(vb.value))
    res = abs(va.value - vb.value) / scale if scale > 0 else 0.0
    return res, va, vb


def linear_chart(A, box: Box | None = None, target_norm=None, b=None) -> Chart:
    f = affine_map(A, b, target_norm)
    box = box or Box.unit(f.domain_dim)
    sv = np.linalg.svd(f.matrix, compute_uv=False)
    return Chart(box, f, None, (max(float(sv.min()), 1e-12), max(float(sv.max()), 1e-12)))
