"""Semi-norms on R^n, their unit balls, polars and pullbacks.

A semi-norm is stored in one of five representations:

* :class:`Ellipsoidal` -- ``s(x) = sqrt(x^T Q x)``
* :class:`PolytopeVertices` -- unit ball is the symmetric hull of ``V``
* :class:`PolytopeFacets` -- unit ball is ``{x : |<h, x>| <= 1}``
* :class:`LpNorm` -- ``s(x) = ||x / scales||_p``
* :class:`Pullback` -- ``s = base o L``

Every representation is immutable.  :func:`reduce_norm` rewrites a norm
into the simplest exact representation available, which is what the volume
and Jacobian code dispatches on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError
from scipy.special import gamma
from scipy.stats import qmc

DEG_TOL = 1e-10
MAX_EXACT_POLYTOPE_DIM = 4


class DegenerateNormError(ValueError):
    """Raised when an operation needs a norm but got a semi-norm with a kernel."""


def ball_volume(n: int) -> float:
    """Lebesgue measure of the Euclidean unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def lp_ball_volume(p: float, n: int) -> float:
    """Closed form for the volume of the unit l^p ball in R^n."""
    if math.isinf(p):
        return 2.0**n
    return (2 * gamma(1 + 1 / p)) ** n / gamma(1 + n / p)


def _as_matrix(L) -> np.ndarray:
    if isinstance(L, LinearMap):
        return L.matrix
    M = np.atleast_2d(np.asarray(L, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ValueError("linear map has non-finite entries")
    return M


@dataclass(frozen=True, eq=False)
class LinearMap:
    """An ``n_out x n_in`` real matrix viewed as a linear map."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if not np.all(np.isfinite(M)):
            raise ValueError("linear map has non-finite entries")
        object.__setattr__(self, "matrix", M)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def det(self) -> float:
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("determinant of a non-square map")
        return float(np.linalg.det(self.matrix))

    def is_bijective(self, tol: float = DEG_TOL) -> bool:
        r, c = self.matrix.shape
        return r == c and abs(np.linalg.det(self.matrix)) > tol

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T


def _symmetrize(P: np.ndarray) -> np.ndarray:
    """Keep one representative per +-pair, dropping zeros and duplicates."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    P = P[np.linalg.norm(P, axis=1) > 0]
    if len(P) == 0:
        raise ValueError("empty point list")
    # flip so that the first nonzero coordinate is positive
    idx = np.argmax(np.abs(P) > 1e-14 * np.abs(P).max(axis=1, keepdims=True), axis=1)
    signs = np.sign(P[np.arange(len(P)), idx])
    P = P * signs[:, None]
    scale = np.abs(P).max()
    _, keep = np.unique(np.round(P / scale, 12), axis=0, return_index=True)
    return P[np.sort(keep)]


def _both_signs(P: np.ndarray) -> np.ndarray:
    return np.vstack([P, -P])


class SemiNorm:
    """Base class; subclasses implement ``_eval`` on an ``(k, n)`` array."""

    dim: int

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected vectors of dimension {self.dim}, got {x.shape[-1]}")
        if x.ndim == 1:
            return float(self._eval(x[None, :])[0])
        return self._eval(x.reshape(-1, self.dim)).reshape(x.shape[:-1])

    def _eval(self, X: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Ellipsoidal(SemiNorm):
    Q: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        Q = 0.5 * (Q + Q.T)
        if np.linalg.eigvalsh(Q).min() < -1e-9 * max(1.0, np.abs(Q).max()):
            raise ValueError("Q must be positive semidefinite")
        object.__setattr__(self, "Q", Q)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def _eval(self, X):
        return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", X, self.Q, X), 0.0))


@dataclass(frozen=True, eq=False)
class PolytopeVertices(SemiNorm):
    """Gauge of ``conv(+-V)``; ``V`` must span R^n."""

    V: np.ndarray

    def __post_init__(self):
        V = _symmetrize(self.V)
        if np.linalg.matrix_rank(V) < V.shape[1]:
            raise ValueError("vertex list does not span R^n; the gauge is not a semi-norm")
        object.__setattr__(self, "V", V)

    @property
    def dim(self) -> int:
        return self.V.shape[1]

    @cached_property
    def facets(self) -> np.ndarray:
        return hull_facets(self.V)

    def _eval(self, X):
        if self.dim <= MAX_EXACT_POLYTOPE_DIM:
            return np.abs(X @ self.facets.T).max(axis=1)
        return np.array([gauge_lp(self.V, x) for x in X])


@dataclass(frozen=True, eq=False)
class PolytopeFacets(SemiNorm):
    """``s(x) = max_h |<h, x>|``; a norm iff the rows of ``H`` span R^n."""

    H: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "H", _symmetrize(self.H))

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    @cached_property
    def vertices(self) -> np.ndarray:
        return hull_facets(self.H)

    def _eval(self, X):
        return np.abs(X @ self.H.T).max(axis=1)


@dataclass(frozen=True, eq=False)
class LpNorm(SemiNorm):
    p: float
    scales: np.ndarray

    def __post_init__(self):
        p = float(self.p)
        if not p >= 1:
            raise ValueError("p must lie in [1, inf]")
        a = np.atleast_1d(np.asarray(self.scales, dtype=float))
        if np.any(a <= 0):
            raise ValueError("scales must be positive")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "scales", a)

    @property
    def dim(self) -> int:
        return len(self.scales)

    def _eval(self, X):
        return np.linalg.norm(X / self.scales, ord=self.p, axis=1)


@dataclass(frozen=True, eq=False)
class Pullback(SemiNorm):
    """``x -> base(L x)`` for a linear map ``L: R^n -> R^m``."""

    base: SemiNorm
    L: np.ndarray

    def __post_init__(self):
        L = _as_matrix(self.L)
        if L.shape[0] != self.base.dim:
            raise ValueError(f"map has {L.shape[0]} outputs, base norm has dimension {self.base.dim}")
        object.__setattr__(self, "L", L)

    @property
    def dim(self) -> int:
        return self.L.shape[1]

    def _eval(self, X):
        return self.base(X @ self.L.T)


Norm = Union[Ellipsoidal, PolytopeVertices, PolytopeFacets, LpNorm, Pullback]


def psd_sqrt(Q: np.ndarray) -> np.ndarray:
    """Symmetric square root of a positive semidefinite matrix."""
    w, U = np.linalg.eigh(Q)
    return (U * np.sqrt(np.maximum(w, 0.0))) @ U.T


def euclidean(n: int) -> Ellipsoidal:
    return Ellipsoidal(np.eye(n))


def l1(n: int) -> LpNorm:
    return LpNorm(1.0, np.ones(n))


def linf(n: int) -> LpNorm:
    return LpNorm(math.inf, np.ones(n))


# --------------------------------------------------------------------------
# polytope helpers


def hull_facets(P: np.ndarray) -> np.ndarray:
    """Facet normals ``h`` (one per +-pair) with ``conv(+-P) = {|<h,x>| <= 1}``.

    The same routine enumerates the vertices of ``{|<h,x>| <= 1}`` when fed
    the normals, since the two bodies are polar to each other.
    """
    P = np.atleast_2d(P)
    n = P.shape[1]
    if n == 1:
        return np.array([[1.0 / np.abs(P).max()]])
    if np.linalg.matrix_rank(P) < n:
        raise DegenerateNormError("points do not span R^n")
    try:
        hull = ConvexHull(_both_signs(P))
    except QhullError as exc:  # pragma: no cover - qhull failures on spanning sets are rare
        raise DegenerateNormError(str(exc)) from exc
    normals = hull.equations[:, :n]
    offsets = -hull.equations[:, n]
    return _symmetrize(normals / offsets[:, None])


def gauge_lp(V: np.ndarray, x: np.ndarray) -> float:
    """Minkowski gauge of ``conv(+-V)`` at ``x``: min sum|c| subject to V^T c = x."""
    V = np.atleast_2d(V)
    k = len(V)
    A_eq = np.hstack([V.T, -V.T])
    res = linprog(np.ones(2 * k), A_eq=A_eq, b_eq=x, bounds=(0, None), method="highs")
    if res.status == 2:
        return math.inf
    if not res.success:
        raise RuntimeError(f"gauge LP failed: {res.message}")
    return float(res.fun)


def _polytope_volume(V: np.ndarray) -> float:
    """Volume of ``conv(+-V)`` as a sum of origin cones over triangulated facets."""
    n = V.shape[1]
    if n == 1:
        return 2.0 * np.abs(V).max()
    hull = ConvexHull(_both_signs(V))
    simplices = hull.points[hull.simplices]  # (f, n, n)
    return float(np.abs(np.linalg.det(simplices)).sum() / math.factorial(n))


# --------------------------------------------------------------------------
# canonical forms


def reduce_norm(s: SemiNorm) -> SemiNorm:
    """Rewrite ``s`` into an exact Ellipsoidal/Polytope form when one exists.

    Lp norms with p in {1, 2, inf} and pullbacks of exact forms are rewritten;
    anything else is returned unchanged.  The result is memoized on ``s``.
    """
    if isinstance(s, (Ellipsoidal, PolytopeVertices, PolytopeFacets)):
        return s
    r = s.__dict__.get("_reduced")
    if r is None:
        r = _reduce(s)
        object.__setattr__(s, "_reduced", r)
    return r


def _reduce(s: SemiNorm) -> SemiNorm:
    if isinstance(s, LpNorm):
        a = s.scales
        if s.p == 2:
            return Ellipsoidal(np.diag(1 / a**2))
        if s.p == 1:
            return PolytopeVertices(np.diag(a))
        if math.isinf(s.p):
            return PolytopeFacets(np.diag(1 / a))
        return s
    if isinstance(s, Pullback):
        base = reduce_norm(s.base)
        L = s.L
        if isinstance(base, Ellipsoidal):
            return Ellipsoidal(L.T @ base.Q @ L)
        if isinstance(base, PolytopeFacets):
            return PolytopeFacets(base.H @ L)
        if isinstance(base, PolytopeVertices):
            if L.shape[0] == L.shape[1] and abs(np.linalg.det(L)) > DEG_TOL:
                return PolytopeVertices(np.linalg.solve(L, base.V.T).T)
            if base.dim <= MAX_EXACT_POLYTOPE_DIM:
                return PolytopeFacets(base.facets @ L)
        if isinstance(base, Pullback):
            return Pullback(base.base, base.L @ L)
        return Pullback(base, L)
    return s


def is_exact(s: SemiNorm) -> bool:
    return isinstance(reduce_norm(s), (Ellipsoidal, PolytopeVertices, PolytopeFacets))


def is_degenerate(s: SemiNorm, tol: float = DEG_TOL) -> bool:
    """True when ``s`` has a nontrivial kernel (a semi-norm that is not a norm)."""
    r = reduce_norm(s)
    if isinstance(r, Ellipsoidal):
        return bool(np.linalg.eigvalsh(r.Q).min() <= tol)
    if isinstance(r, PolytopeFacets):
        return bool(np.linalg.svd(r.H, compute_uv=False).min() <= tol) or len(r.H) < r.dim
    if isinstance(r, PolytopeVertices):
        return False
    if isinstance(r, LpNorm):
        return False
    if isinstance(r, Pullback):
        sv = np.linalg.svd(r.L, compute_uv=False)
        return r.L.shape[0] < r.L.shape[1] or bool(sv.min() <= tol) or is_degenerate(r.base, tol)
    raise TypeError(f"unknown semi-norm {type(s).__name__}")


def polytope_vertices(s: SemiNorm) -> np.ndarray:
    """Vertices (one per +-pair) of a polytopal unit ball."""
    r = reduce_norm(s)
    if isinstance(r, PolytopeVertices):
        return r.V
    if isinstance(r, PolytopeFacets):
        if is_degenerate(r):
            raise DegenerateNormError("unit ball is unbounded")
        return r.vertices
    raise TypeError("not a polytopal norm")


def polytope_facets(s: SemiNorm) -> np.ndarray:
    r = reduce_norm(s)
    if isinstance(r, PolytopeFacets):
        return r.H
    if isinstance(r, PolytopeVertices):
        return r.facets
    raise TypeError("not a polytopal norm")


def is_polytope(s: SemiNorm) -> bool:
    return isinstance(reduce_norm(s), (PolytopeVertices, PolytopeFacets))


# --------------------------------------------------------------------------
# spec-level operations


def evaluate(s: SemiNorm, x) -> float:
    """Value of ``s`` at a single vector.

    Vertex-presented polytopes use the linear-programming gauge here; the
    vectorized ``s(X)`` call goes through the facet form instead.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) != s.dim:
        raise ValueError(f"expected a vector of dimension {s.dim}")
    if isinstance(s, PolytopeVertices):
        return gauge_lp(s.V, x)
    return s(x)


@dataclass(frozen=True)
class ConvexBodyVolume:
    value: float
    method: str  # exact_ellipsoid | exact_polytope | quadrature
    error_bound: float = 0.0

    def to_json(self) -> dict:
        return {"value": self.value, "method": self.method, "error_bound": self.error_bound}


def unit_ball_volume(s: SemiNorm, n_samples: int = 2**16) -> ConvexBodyVolume:
    """Lebesgue measure of the unit ball of a norm."""
    if is_degenerate(s):
        raise DegenerateNormError("semi-norm is not a norm: unit ball is unbounded")
    r = reduce_norm(s)
    n = s.dim
    if isinstance(r, Ellipsoidal):
        return ConvexBodyVolume(ball_volume(n) / math.sqrt(np.linalg.det(r.Q)), "exact_ellipsoid")
    if isinstance(r, (PolytopeVertices, PolytopeFacets)) and n <= MAX_EXACT_POLYTOPE_DIM:
        return ConvexBodyVolume(_polytope_volume(polytope_vertices(r)), "exact_polytope")
    return _quadrature_volume(s, n_samples)


def bounding_box(s: SemiNorm) -> np.ndarray:
    """Half-widths of the smallest axis box containing the unit ball."""
    dual = polar(s)
    return np.array([dual(e) for e in np.eye(s.dim)])


def _quadrature_volume(s: SemiNorm, n_samples: int) -> ConvexBodyVolume:
    half = bounding_box(s)
    pts = qmc.Halton(d=s.dim, scramble=False).random(n_samples + 1)[1:]
    X = (2 * pts - 1) * half
    frac = float(np.mean(s(X) <= 1.0))
    box = float(np.prod(2 * half))
    # 99% binomial band around the hit fraction; a heuristic for Halton points
    err = 2.576 * math.sqrt(max(frac * (1 - frac), 1.0 / n_samples) / n_samples) * box
    return ConvexBodyVolume(frac * box, "quadrature", err)


def polar(s: SemiNorm) -> SemiNorm:
    """The dual norm ``s*(y) = sup{<y, x> : s(x) <= 1}``."""
    if is_degenerate(s):
        raise DegenerateNormError("polar of a degenerate semi-norm")
    if isinstance(s, Ellipsoidal):
        return Ellipsoidal(np.linalg.inv(s.Q))
    if isinstance(s, PolytopeVertices):
        return PolytopeFacets(s.V)
    if isinstance(s, PolytopeFacets):
        return PolytopeVertices(s.H)
    if isinstance(s, LpNorm):
        q = 1.0 if math.isinf(s.p) else (math.inf if s.p == 1 else s.p / (s.p - 1))
        return LpNorm(q, 1.0 / s.scales)
    if isinstance(s, Pullback):
        if s.L.shape[0] == s.L.shape[1]:
            return Pullback(polar(s.base), np.linalg.inv(s.L).T)
        r = reduce_norm(s)
        if r is not s and not isinstance(r, Pullback):
            return polar(r)
        raise NotImplementedError("polar of a non-square pullback of a non-polytopal norm")
    raise TypeError(f"unknown semi-norm {type(s).__name__}")


def pullback(s: SemiNorm, L) -> Pullback:
    """``s o L``; the result has dimension ``L.shape[1]``."""
    return Pullback(s, _as_matrix(L))


def scaled(s: SemiNorm, c: float) -> Pullback:
    """The norm ``c * s``."""
    return Pullback(s, c * np.eye(s.dim))


# --------------------------------------------------------------------------
# direction grids and operator norms


def direction_grid(n: int, count: int | None = None) -> np.ndarray:
    """Deterministic unit directions covering the half-sphere (one per +-pair)."""
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        count = count or 360
        t = np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    count = count or 266 * 4
    # Fibonacci sphere for n = 3, Gaussian-Halton mapping otherwise
    if n == 3:
        i = np.arange(2 * count) + 0.5
        phi = np.arccos(1 - 2 * i / (2 * count))
        th = np.pi * (1 + 5**0.5) * i
        P = np.column_stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)])
        return P[P[:, 2] >= 0][:count]
    from scipy.stats import norm as _gauss

    U = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    G = _gauss.ppf(np.clip(U, 1e-12, 1 - 1e-12))
    return G / np.linalg.norm(G, axis=1, keepdims=True)


def boundary_points(s: SemiNorm, count: int | None = None) -> np.ndarray:
    """Points ``u / s(u)`` on the unit sphere of ``s`` along a direction grid."""
    U = direction_grid(s.dim, count)
    return U / s(U)[:, None]


def op_norm(A, source: SemiNorm, target: SemiNorm) -> float:
    """Operator norm of ``A: (R^m, source) -> (R^n, target)``.

    Exact when either ball is polytopal or both are ellipsoids; otherwise a
    direction-grid maximum.
    """
    A = _as_matrix(A)
    if A.shape != (target.dim, source.dim):
        raise ValueError(f"map of shape {A.shape} does not go from R^{source.dim} to R^{target.dim}")
    src, tgt = reduce_norm(source), reduce_norm(target)
    if is_polytope(src) and not is_degenerate(src):
        return float(target(polytope_vertices(src) @ A.T).max())
    if is_polytope(tgt):
        H = polytope_facets(tgt)
        if isinstance(src, Ellipsoidal) and not is_degenerate(src):
            return float(polar(src)(H @ A).max())
    if isinstance(src, Ellipsoidal) and isinstance(tgt, Ellipsoidal) and not is_degenerate(src):
        return float(np.linalg.norm(psd_sqrt(tgt.Q) @ A @ np.linalg.inv(psd_sqrt(src.Q)), 2))
    U = direction_grid(source.dim, 2048 if source.dim == 2 else None)
    return float((target(U @ A.T) / source(U)).max())


# --------------------------------------------------------------------------
# random instances for sweeps


def random_polytope(n: int, rng: np.random.Generator, pairs: int | None = None) -> PolytopeVertices:
    """Symmetric polytope with ``pairs`` random vertex pairs (default n+1..2n+1)."""
    k = pairs if pairs is not None else int(rng.integers(n + 1, 2 * n + 2))
    while True:
        V = rng.normal(size=(k, n))
        if np.linalg.matrix_rank(V) == n and abs(np.linalg.det(V[:n])) > 1e-3:
            return PolytopeVertices(V)


def random_ellipsoid(n: int, rng: np.random.Generator) -> Ellipsoidal:
    A = rng.normal(size=(n, n))
    return Ellipsoidal(A @ A.T + 0.2 * np.eye(n))


def random_exact_norm(n: int, rng: np.random.Generator) -> SemiNorm:
    return random_polytope(n, rng) if rng.random() < 0.5 else random_ellipsoid(n, rng)


def random_bijection(n: int, rng: np.random.Generator, cond: float = 1e3) -> np.ndarray:
    while True:
        L = rng.normal(size=(n, n))
        if np.linalg.cond(L) < cond:
            return L
