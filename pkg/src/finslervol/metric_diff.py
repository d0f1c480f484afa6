"""Lipschitz maps into normed R^m and their metric differentials."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .jacobians import BUSEMANN, jacobian
from .norms import (
    DEG_TOL,
    PolytopeVertices,
    SemiNorm,
    ball_volume,
    direction_grid,
    euclidean,
    pullback,
    unit_ball_volume,
)
from .quadrature import Box, default_resolution, midpoint_grid


@dataclass(frozen=True, eq=False)
class LipschitzMap:
    """A map ``R^n -> (R^m, norm)``.

    ``func`` is vectorized: ``(k, n) -> (k, m)``.  ``target_norm`` is either
    a :class:`SemiNorm` or a callable ``point -> SemiNorm`` for targets whose
    norm varies with position (Finsler structures).  ``matrix``/``offset``
    are set for affine maps, and ``spec`` keeps the JSON description when
    the map came from one.
    """

    domain_dim: int
    target_dim: int
    func: Callable
    target_norm: object
    declared_lip: float | None = None
    matrix: np.ndarray | None = None
    offset: np.ndarray | None = None
    metric: Callable | None = None
    spec: dict | None = None

    def __call__(self, P):
        P = np.asarray(P, dtype=float)
        if P.ndim == 1:
            return self.func(P[None, :])[0]
        return self.func(P)

    @property
    def is_linear(self) -> bool:
        return self.matrix is not None

    def norm_at(self, x) -> SemiNorm:
        if isinstance(self.target_norm, SemiNorm):
            return self.target_norm
        return self.target_norm(np.asarray(x, dtype=float))

    @property
    def has_constant_norm(self) -> bool:
        return isinstance(self.target_norm, SemiNorm)

    def compose(self, inner: "LipschitzMap") -> "LipschitzMap":
        """``self o inner``."""
        if inner.target_dim != self.domain_dim:
            raise ValueError("dimension mismatch in composition")
        matrix = offset = None
        if self.is_linear and inner.is_linear:
            matrix = self.matrix @ inner.matrix
            offset = self.matrix @ inner.offset + self.offset
        outer_f, inner_f = self.func, inner.func
        return LipschitzMap(inner.domain_dim, self.target_dim, lambda P: outer_f(inner_f(P)),
                            self.target_norm, None, matrix, offset)


def affine_map(A, b=None, target_norm: SemiNorm | None = None) -> LipschitzMap:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    b = np.zeros(m) if b is None else np.asarray(b, dtype=float)
    norm = target_norm if target_norm is not None else euclidean(m)
    return LipschitzMap(n, m, lambda P: P @ A.T + b, norm, None, A, b,
                        spec={"kind": "linear", "A": A.tolist(), "b": b.tolist()})


def identity_map(n: int, target_norm: SemiNorm | None = None) -> LipschitzMap:
    f = affine_map(np.eye(n), None, target_norm)
    return LipschitzMap(n, n, f.func, f.target_norm, 1.0, f.matrix, f.offset, spec={"kind": "identity"})


def polynomial_map(terms, domain_dim: int, target_norm: SemiNorm) -> LipschitzMap:
    """Map whose i-th output is ``sum(coef * prod(p_j ** powers_j))`` over ``terms[i]``.

    ``terms`` is a list (one entry per output) of ``(coef, powers)`` pairs.
    """
    terms = [[(float(c), np.asarray(pw, dtype=float)) for c, pw in out] for out in terms]

    def func(P):
        cols = []
        for out in terms:
            v = np.zeros(len(P))
            for c, pw in out:
                v = v + c * np.prod(P**pw, axis=1)
            cols.append(v)
        return np.column_stack(cols)

    spec = {"kind": "poly", "terms": [[[c, pw.tolist()] for c, pw in out] for out in terms]}
    return LipschitzMap(domain_dim, len(terms), func, target_norm, spec=spec)


# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MetricDifferential:
    at: np.ndarray
    seminorm: SemiNorm
    matrix: np.ndarray | None = None


def jacobian_matrices(f: LipschitzMap, P: np.ndarray, h: float) -> np.ndarray:
    """Central-difference differentials at every row of ``P``: shape (k, m, n)."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if f.is_linear:
        return np.broadcast_to(f.matrix, (len(P),) + f.matrix.shape).copy()
    n = P.shape[1]
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        cols.append((f(P + e) - f(P - e)) / (2 * h))
    D = np.stack(cols, axis=-1)
    if not np.all(np.isfinite(D)):
        raise ValueError("non-finite evaluation in finite differences")
    return D


def default_step(domain: Box | None) -> float:
    return 1e-5 * (domain.diameter if domain is not None else 1.0)


def metric_differential(f: LipschitzMap, p, h: float | None = None, *, domain: Box | None = None,
                        grid: int | None = None) -> MetricDifferential:
    """The semi-norm ``md_p f`` at ``p``.

    For normed targets this is ``target_norm o D_p f`` with ``D_p f`` from
    central differences.  For maps given only through a metric (``f.metric``
    set, no norm) the gauge ``d(f(p), f(p + h u)) / h`` is tabulated on a
    direction grid and its convex hull used as the unit ball.
    """
    p = np.asarray(p, dtype=float)
    h = default_step(domain) if h is None else h
    if h <= 0:
        raise ValueError("step must be positive")
    if domain is not None:
        if not (np.all(p - h >= domain.lo) and np.all(p + h <= domain.hi)):
            raise ValueError("p is not interior to the domain")
    if f.metric is not None and f.target_norm is None:
        U = direction_grid(f.domain_dim, grid)
        fp = f(p)
        g = np.array([f.metric(fp, f(p + h * u)) for u in U]) / h
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite metric evaluation")
        return MetricDifferential(p, PolytopeVertices(U / g[:, None]))
    D = jacobian_matrices(f, p[None, :], h)[0]
    return MetricDifferential(p, pullback(f.norm_at(f(p)), D), D)


def area_formula_check(f: LipschitzMap, box: Box, quad: int | None = None, h: float | None = None):
    """Both sides of the metric area formula for an injective linear ``f``.

    ``lhs`` integrates the Busemann Jacobian of the metric differential over
    the box; ``rhs`` is the Hausdorff measure of ``f(box)``: Lebesgue measure
    in orthonormal coordinates of the image plane, rescaled by
    ``omega_n / Leb(slice of the target ball)``.
    Returns ``(lhs, rhs, relative residual)``.
    """
    if not f.is_linear:
        raise NotImplementedError("the Hausdorff side is only computed for linear maps")
    n = f.domain_dim
    quad = quad or default_resolution(n)
    h = default_step(box) if h is None else h
    P, w = midpoint_grid(box, quad)
    D = jacobian_matrices(f, P, h)
    norm = f.norm_at(f.offset)
    # md is constant for a linear map; integrate the distinct values
    keys, inverse = np.unique(np.round(D.reshape(len(D), -1), 12), axis=0, return_inverse=True)
    vals = np.array([jacobian(BUSEMANN, pullback(norm, D[np.flatnonzero(inverse == i)[0]])).value
                     for i in range(len(keys))])
    lhs = float(vals[inverse.ravel()].sum() * w)

    G = f.matrix
    U, R = np.linalg.qr(G)
    if abs(np.linalg.det(R)) <= DEG_TOL:
        raise ValueError("map is not injective")
    image_area = abs(np.linalg.det(R)) * box.volume
    ball = unit_ball_volume(pullback(norm, U)).value
    rhs = image_area * ball_volume(n) / ball
    return lhs, rhs, abs(lhs - rhs) / rhs
