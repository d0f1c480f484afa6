"""Löwner (circumscribed) and John (inscribed) ellipsoids of symmetric bodies.

Everything here is origin-symmetric, so an ellipsoid is a positive definite
``P`` with ellipsoid ``{x : x^T P x <= 1}``, i.e. the unit ball of
``Ellipsoidal(P)``.  The John ellipsoid of a body is the polar of the Löwner
ellipsoid of its polar, so a single solver covers both.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .norms import (
    DegenerateNormError,
    Ellipsoidal,
    SemiNorm,
    boundary_points,
    is_degenerate,
    polar,
    polytope_vertices,
    reduce_norm,
    is_polytope,
)

MVEE_TOL = 1e-9
MVEE_MAX_ITER = 100_000
POLISH_EVERY = 200  # Khachiyan steps between Newton polish attempts


class SolverError(RuntimeError):
    """An iterative solver hit its iteration cap or broke down."""


@dataclass(frozen=True, eq=False)
class EllipsoidFit:
    P: np.ndarray
    exact: bool  # False when the body was replaced by a sampled inner polytope
    gap: float  # relative duality gap of the final iterate
    iterations: int

    @property
    def norm(self) -> Ellipsoidal:
        return Ellipsoidal(self.P)


def mvee_symmetric(points, tol: float = MVEE_TOL, max_iter: int = MVEE_MAX_ITER):
    """Minimum-volume origin-centred ellipsoid containing ``+-points``.

    Khachiyan's barycentric coordinate ascent on the D-optimal design
    weights, with Todd-Yildirim away steps and a periodic
    Newton polish on the support (:func:`_newton_polish`).  Stops once every point satisfies
    ``p^T P p <= 1 + tol`` for the dual iterate; the returned ``P`` is then
    shrunk by that factor so that containment holds exactly.

    Returns ``(P, gap, iterations)``.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    N, n = X.shape
    if np.linalg.matrix_rank(X) < n:
        raise DegenerateNormError("points do not span R^n")
    u = np.full(N, 1.0 / N)
    for it in range(1, max_iter + 1):
        if it % POLISH_EVERY == 0:
            polished = _newton_polish(X, u, tol)
            if polished is not None:
                u = polished
        M = (X.T * u) @ X
        Minv = np.linalg.inv(M)
        g = np.einsum("ij,jk,ik->i", X, Minv, X)
        j = int(np.argmax(g))
        gmax = g[j]
        if gmax <= n * (1 + tol):
            break
        active = np.flatnonzero(u > 0)
        k = int(active[np.argmin(g[active])])
        gmin = g[k]
        if gmax - n >= n - gmin:
            step = (gmax / n - 1) / (gmax - 1)
            u *= 1 - step
            u[j] += step
        else:
            step = (1 - gmin / n) / (gmin - 1) if gmin > 1 else np.inf
            step = min(step, u[k] / (1 - u[k]))
            u *= 1 + step
            u[k] -= step
            u[u < 1e-300] = 0.0
    else:
        raise SolverError(f"MVEE did not reach tolerance {tol} in {max_iter} iterations")
    gap = gmax / n - 1
    P = Minv / (n * max(1.0, gmax / n))
    return P, float(gap), it


def _newton_polish(X: np.ndarray, u: np.ndarray, tol: float, rounds: int = 10):
    """Active-set Newton on the optimality conditions ``g_i(u) = n`` over the support.

    Coordinate ascent crawls when support points nearly coincide (sliver
    edges of sections); Newton on the support converges in a few steps.
    Since ``sum u_i g_i = n`` identically, ``g = n`` on the support forces
    ``sum u = 1``.  Returns full weights certified by the gap test on all
    points, or ``None``.
    """
    N, n = X.shape
    S = np.flatnonzero(u > 1e-6 * u.max())
    v = u[S] / u[S].sum()
    for _ in range(rounds):
        for _ in range(50):
            XS = X[S]
            try:
                Minv = np.linalg.inv((XS.T * v) @ XS)
                K = XS @ Minv @ XS.T
                F = np.diag(K) - n
                if np.abs(F).max() < 1e-13 * n:
                    break
                d = np.linalg.solve(-(K**2), -F)
            except np.linalg.LinAlgError:
                return None
            t = 1.0
            while np.any(v + t * d <= 0) and t > 1e-12:
                t *= 0.5
            if t <= 1e-12:  # a weight wants to leave the support
                drop = int(np.argmin(v + d))
                S, v = np.delete(S, drop), np.delete(v, drop)
                v /= v.sum()
                if len(S) < n:
                    return None
                continue
            v = v + t * d
        w = np.zeros(N)
        w[S] = v
        try:
            Minv = np.linalg.inv((X.T * w) @ X)
        except np.linalg.LinAlgError:
            return None
        g = np.einsum("ij,jk,ik->i", X, Minv, X)
        if not np.all(np.isfinite(g)) or np.any(w < 0):
            return None
        j = int(np.argmax(g))
        if g[j] <= n * (1 + tol):
            return w / w.sum()
        if j in S:
            return None
        S = np.append(S, j)
        v = np.append(v * (1 - 1e-3), 1e-3)
    return None


def lowner(s: SemiNorm, samples: int | None = None) -> EllipsoidFit:
    """Minimum-volume ellipsoid containing the unit ball of ``s``."""
    if is_degenerate(s):
        raise DegenerateNormError("unit ball is unbounded")
    r = reduce_norm(s)
    if isinstance(r, Ellipsoidal):
        return EllipsoidFit(r.Q, True, 0.0, 0)
    if is_polytope(r):
        P, gap, it = mvee_symmetric(polytope_vertices(r))
        return EllipsoidFit(P, True, gap, it)
    P, gap, it = mvee_symmetric(boundary_points(s, samples))
    return EllipsoidFit(P, False, gap, it)


def john(s: SemiNorm, samples: int | None = None) -> EllipsoidFit:
    """Maximum-volume ellipsoid inside the unit ball of ``s``."""
    if is_degenerate(s):
        raise DegenerateNormError("unit ball is unbounded")
    r = reduce_norm(s)
    if isinstance(r, Ellipsoidal):
        return EllipsoidFit(r.Q, True, 0.0, 0)
    fit = lowner(polar(r), samples)
    return EllipsoidFit(np.linalg.inv(fit.P), fit.exact, fit.gap, fit.iterations)


def ellipsoid_volume(P: np.ndarray) -> float:
    from .norms import ball_volume

    return ball_volume(P.shape[0]) / float(np.sqrt(np.linalg.det(P)))
