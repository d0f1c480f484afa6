"""Jacobians of semi-norms.

The central object is ``J^sigma(s) = sup |det F|`` over linear maps ``F``
with ``F(B_s)`` inside ``B_sigma``.  Writing the volume ratio
``Leb(B_sigma) / Leb(F^{-1} B_sigma)`` as ``|det F|`` turns the definition
into a determinant maximization under an operator-norm constraint
``||F: (R^n, s) -> (R^n, sigma)|| <= 1``.

Exact routes:

* ``sigma`` ellipsoidal -- Löwner ellipsoid of ``B_s``;
* ``s`` ellipsoidal -- John ellipsoid of ``B_sigma``;
* ``B_sigma`` a parallelotope -- rows of ``H F`` range over polar vertices of
  ``B_s``, and ``|det|`` is maximized at vertices (multilinearity);
* ``B_s`` a cross-polytope -- the same argument on columns.

Everything else goes through :func:`_ascent`, a multi-start log-det ascent
whose answer is a certified *lower* bound.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import special_ortho_group

from .ellipsoids import SolverError, john, lowner
from .norms import (
    DEG_TOL,
    Ellipsoidal,
    PolytopeFacets,
    PolytopeVertices,
    SemiNorm,
    ball_volume,
    boundary_points,
    direction_grid,
    euclidean,
    is_degenerate,
    is_polytope,
    linf,
    op_norm,
    polar,
    polytope_facets,
    polytope_vertices,
    psd_sqrt,
    pullback,
    reduce_norm,
    unit_ball_volume,
)

FEAS_TOL = 1e-8
N_STARTS = 8
_MAX_ENUMERATION = 200_000


class Kind(enum.Enum):
    GENERIC_SIGMA = "sigma"
    BUSEMANN = "busemann"
    HOLMES_THOMPSON = "holmes-thompson"
    INSCRIBED_RIEMANNIAN = "inscribed-riemannian"
    CIRCUMSCRIBED_RIEMANNIAN = "circumscribed-riemannian"
    MASS_STAR = "mass-star"


@dataclass(frozen=True, eq=False)
class JacobianKind:
    kind: Kind
    sigma: SemiNorm | None = None

    def __post_init__(self):
        if self.kind is Kind.GENERIC_SIGMA:
            if self.sigma is None:
                raise ValueError("GenericSigma needs a norm sigma")
            if is_degenerate(self.sigma):
                raise ValueError("sigma must be a norm")

    @property
    def name(self) -> str:
        return self.kind.value

    def sigma_for(self, n: int) -> SemiNorm | None:
        """The ``sigma`` of the J^sigma family this kind belongs to, if any."""
        if self.kind is Kind.GENERIC_SIGMA:
            return self.sigma
        if self.kind is Kind.CIRCUMSCRIBED_RIEMANNIAN:
            return euclidean(n)
        if self.kind is Kind.MASS_STAR:
            return linf(n)
        return None

    @classmethod
    def parse(cls, name: str, sigma: SemiNorm | None = None) -> "JacobianKind":
        return cls(Kind(name), sigma)


def generic_sigma(sigma: SemiNorm) -> JacobianKind:
    return JacobianKind(Kind.GENERIC_SIGMA, sigma)


BUSEMANN = JacobianKind(Kind.BUSEMANN)
HOLMES_THOMPSON = JacobianKind(Kind.HOLMES_THOMPSON)
INSCRIBED_RIEMANNIAN = JacobianKind(Kind.INSCRIBED_RIEMANNIAN)
CIRCUMSCRIBED_RIEMANNIAN = JacobianKind(Kind.CIRCUMSCRIBED_RIEMANNIAN)
MASS_STAR = JacobianKind(Kind.MASS_STAR)
ALL_FIXED_KINDS = (BUSEMANN, HOLMES_THOMPSON, INSCRIBED_RIEMANNIAN, CIRCUMSCRIBED_RIEMANNIAN, MASS_STAR)


@dataclass(frozen=True, eq=False)
class JacobianResult:
    value: float
    optimizer: np.ndarray | None = None
    certificate: float | None = None  # max over B_s test points of sigma(F x) - 1
    certified: bool = True  # False: value is only a certified lower bound
    method: str = ""

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "F": None if self.optimizer is None else self.optimizer.tolist(),
            "certificate": self.certificate,
            "certified": self.certified,
            "method": self.method,
        }


def jacobian(kind: JacobianKind, s: SemiNorm, *, method: str = "auto", seed: int = 0) -> JacobianResult:
    """Evaluate the Jacobian ``kind`` at the semi-norm ``s``.

    ``method="direct"`` forces the generic ascent for the sigma family even
    when a closed form exists; tests use it as an independent route.
    """
    n = s.dim
    sigma = kind.sigma_for(n)
    if sigma is not None and sigma.dim != n:
        raise ValueError(f"sigma has dimension {sigma.dim}, s has dimension {n}")
    if is_degenerate(s):
        return JacobianResult(0.0, None, None, True, "degenerate")
    omega = ball_volume(n)
    if kind.kind is Kind.BUSEMANN:
        vol = unit_ball_volume(s)
        return JacobianResult(omega / vol.value, certified=vol.error_bound == 0, method=vol.method)
    if kind.kind is Kind.HOLMES_THOMPSON:
        vol = unit_ball_volume(polar(s))
        return JacobianResult(vol.value / omega, certified=vol.error_bound == 0, method=vol.method)
    if kind.kind is Kind.INSCRIBED_RIEMANNIAN:
        fit = john(s)
        vol = omega / math.sqrt(np.linalg.det(fit.P))
        return JacobianResult(vol / omega, certified=fit.exact, method="john")
    if method == "direct" and not _both_ellipsoidal(s, sigma):
        return _ascent(s, sigma, seed=seed, warm_start=False)
    return sigma_jacobian(sigma, s, seed=seed)


# --------------------------------------------------------------------------
# the J^sigma family


def _certificate(F: np.ndarray, s: SemiNorm, sigma: SemiNorm) -> float:
    """max_{x in B_s} sigma(F x) - 1, exact when either ball is a polytope."""
    return op_norm(F, s, sigma) - 1.0


def sigma_jacobian(sigma: SemiNorm, s: SemiNorm, *, seed: int = 0) -> JacobianResult:
    if is_degenerate(sigma):
        raise ValueError("sigma must be a norm")
    if is_degenerate(s):
        return JacobianResult(0.0, None, None, True, "degenerate")
    sr, gr = reduce_norm(s), reduce_norm(sigma)

    if isinstance(gr, Ellipsoidal):
        fit = lowner(sr)
        F = np.linalg.solve(psd_sqrt(gr.Q), psd_sqrt(fit.P))
        return _exact(F, s, sigma, fit.exact, "lowner")
    if isinstance(sr, Ellipsoidal):
        fit = john(gr)
        F = np.linalg.solve(psd_sqrt(fit.P), psd_sqrt(sr.Q))
        return _exact(F, s, sigma, fit.exact, "john")
    if is_polytope(gr) and len(polytope_facets(gr)) == gr.dim and is_polytope(sr):
        H = polytope_facets(gr)
        rows = _best_frame(polytope_vertices(polar(sr)))
        return _exact(np.linalg.solve(H, rows), s, sigma, True, "parallelotope")
    if is_polytope(sr) and len(polytope_vertices(sr)) == sr.dim and is_polytope(gr):
        V = polytope_vertices(sr).T  # columns
        cols = _best_frame(polytope_vertices(gr)).T
        return _exact(cols @ np.linalg.inv(V), s, sigma, True, "cross-polytope")
    return _ascent(s, sigma, seed=seed, warm_start=True)


def _best_frame(P: np.ndarray) -> np.ndarray:
    """The n rows of ``P`` with largest |det|, by enumeration."""
    k, n = P.shape
    combos = math.comb(k, n)
    if combos > _MAX_ENUMERATION:
        raise SolverError(f"vertex enumeration too large ({combos} frames)")
    idx = np.array(list(itertools.combinations(range(k), n)))
    dets = np.abs(np.linalg.det(P[idx]))
    return P[idx[int(np.argmax(dets))]]


def _exact(F, s, sigma, exact, method) -> JacobianResult:
    cert = _certificate(F, s, sigma)
    if cert > 0:  # rounding only; restore feasibility
        F = F / (1 + cert)
        cert = _certificate(F, s, sigma)
    return JacobianResult(abs(float(np.linalg.det(F))), F, cert, exact, method)


def _constraint_data(s: SemiNorm, sigma: SemiNorm):
    """Return ``g(F) -> array`` whose entries are <= 0 iff F(B_s) lies in B_sigma.

    The entries are smooth in F: linear forms for polytope/polytope pairs,
    squared Euclidean norms when one side is ellipsoidal.
    """
    sr, gr = reduce_norm(s), reduce_norm(sigma)
    samples_exact = True
    if not (is_polytope(sr) or isinstance(sr, Ellipsoidal)):
        sr = PolytopeVertices(boundary_points(s))
        samples_exact = False
    if not (is_polytope(gr) or isinstance(gr, Ellipsoidal)):
        gr = PolytopeFacets(boundary_points(polar(sigma)))
        samples_exact = False

    if is_polytope(sr):
        V = polytope_vertices(sr)
        if is_polytope(gr):
            H = polytope_facets(gr)

            def g(F):
                return np.abs(H @ F @ V.T).ravel() - 1.0
        else:
            S = psd_sqrt(gr.Q)

            def g(F):
                return (np.linalg.norm(S @ F @ V.T, axis=0) ** 2) - 1.0
    else:
        Sinv = np.linalg.inv(psd_sqrt(sr.Q))
        if is_polytope(gr):
            H = polytope_facets(gr)

            def g(F):
                return (np.linalg.norm(H @ F @ Sinv, axis=1) ** 2) - 1.0
        else:
            S = psd_sqrt(gr.Q)

            def g(F):
                return np.array([np.linalg.norm(S @ F @ Sinv, 2) ** 2 - 1.0])

    return g, samples_exact, sr, gr


def _ascent(s: SemiNorm, sigma: SemiNorm, *, seed: int = 0, warm_start: bool = True,
            n_starts: int = N_STARTS) -> JacobianResult:
    """Multi-start log-det ascent under exact containment constraints."""
    n = s.dim
    g, exact_constraints, sr, gr = _constraint_data(s, sigma)
    rng = np.random.default_rng(seed)
    starts = []
    if warm_start:
        base = np.linalg.solve(psd_sqrt(john(gr).P), psd_sqrt(lowner(sr).P))
        starts.append(base)
        for _ in range(n_starts - 1):
            R = special_ortho_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)
            starts.append(np.linalg.solve(psd_sqrt(john(gr).P), R @ psd_sqrt(lowner(sr).P)))
    else:
        starts.append(np.eye(n))
        for _ in range(n_starts - 1):
            starts.append(rng.normal(size=(n, n)))

    def neg_logdet(f):
        sign, ld = np.linalg.slogdet(f.reshape(n, n))
        return -ld if sign != 0 else 1e6

    def neg_logdet_grad(f):
        F = f.reshape(n, n)
        return -np.linalg.inv(F).T.ravel()

    cons = {"type": "ineq", "fun": lambda f: -g(f.reshape(n, n))}
    best = None
    for F0 in starts:
        if abs(np.linalg.det(F0)) < DEG_TOL:
            continue
        F0 = F0 / max(1.0 + g(F0).max(), 1e-12) ** (0.5 if _is_squared(sr, gr) else 1.0)
        try:
            res = minimize(neg_logdet, F0.ravel(), jac=neg_logdet_grad, constraints=[cons],
                           method="SLSQP", options={"maxiter": 1000, "ftol": 1e-15})
            F = res.x.reshape(n, n)
        except (ValueError, np.linalg.LinAlgError):
            continue
        if not np.all(np.isfinite(F)):
            continue
        cert = _certificate(F, s, sigma)
        if cert > 0:
            F = F / (1.0 + cert)
        value = abs(float(np.linalg.det(F)))
        if best is None or value > best[0]:
            best = (value, F)
    if best is None:
        raise SolverError("log-det ascent failed from every start")
    value, F = best
    return JacobianResult(value, F, _certificate(F, s, sigma), False,
                          "ascent" if exact_constraints else "ascent-sampled")


def _both_ellipsoidal(s, sigma) -> bool:
    # the constraint is then a spectral norm bound and the optimum is explicit
    return isinstance(reduce_norm(s), Ellipsoidal) and isinstance(reduce_norm(sigma), Ellipsoidal)


def _is_squared(sr, gr) -> bool:
    return not (is_polytope(sr) and is_polytope(gr))


def sigma_upper_bound(sigma: SemiNorm, s: SemiNorm) -> float:
    """``Leb(B_sigma) / Leb(B_s)``; any feasible F satisfies |det F| <= this."""
    return unit_ball_volume(sigma).value / unit_ball_volume(s).value


# --------------------------------------------------------------------------
# axioms and identities


@dataclass
class AxiomReport:
    kind: str
    samples: int = 0
    transformation_residuals: list = field(default_factory=list)
    monotonicity_checked: int = 0
    monotonicity_violations: int = 0
    witnesses: list = field(default_factory=list)

    @property
    def max_transformation_residual(self) -> float:
        return max(self.transformation_residuals, default=0.0)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "samples": self.samples,
            "max_transformation_residual": self.max_transformation_residual,
            "monotonicity_checked": self.monotonicity_checked,
            "monotonicity_violations": self.monotonicity_violations,
            "witnesses": self.witnesses[:10],
        }


def dominates(s_small: SemiNorm, s_big: SemiNorm, count: int | None = None, tol: float = 1e-12) -> bool:
    """``s_small <= s_big`` on a direction grid."""
    U = direction_grid(s_small.dim, count)
    return bool(np.all(s_small(U) <= s_big(U) * (1 + tol) + tol))


def larger_norm(s: SemiNorm, rng: np.random.Generator) -> SemiNorm:
    """A norm ``s' >= s`` pointwise with the same representation family."""
    r = reduce_norm(s)
    n = s.dim
    if isinstance(r, Ellipsoidal):
        A = rng.normal(size=(n, n))
        return Ellipsoidal(r.Q + 0.3 * A @ A.T)
    if is_polytope(r):
        H = polytope_facets(r)
        extra = rng.normal(size=(1, n))
        # scale the new facet so it cuts the ball but keeps it bounded
        extra = extra / np.abs(extra @ polytope_vertices(r).T).max() * rng.uniform(1.05, 1.5)
        return PolytopeFacets(np.vstack([H, extra]))
    return pullback(s, np.diag(rng.uniform(1.0, 1.5, size=n)))


def check_axioms(kind: JacobianKind, samples, *, seed: int = 0, tol: float = 1e-9,
                 grid: int | None = None) -> AxiomReport:
    """Residuals of the transformation law and monotonicity violations.

    Each sample ``(s, L)`` contributes ``|J(s o L) - J(s)|det L|| / (J(s)|det L|)``
    and one monotonicity pair ``(s, s')`` with ``s <= s'`` confirmed on the
    direction grid.
    """
    rng = np.random.default_rng(seed)
    rep = AxiomReport(kind.name)
    for i, (s, L) in enumerate(samples):
        L = np.asarray(getattr(L, "matrix", L), dtype=float)
        rep.samples += 1
        j = jacobian(kind, s, seed=seed).value
        jl = jacobian(kind, pullback(s, L), seed=seed).value
        expected = j * abs(np.linalg.det(L))
        res = abs(jl - expected) / expected if expected > 0 else abs(jl)
        rep.transformation_residuals.append(res)
        big = larger_norm(s, rng)
        if dominates(s, big, grid):
            rep.monotonicity_checked += 1
            jb = jacobian(kind, big, seed=seed).value
            if j > jb * (1 + tol) + tol:
                rep.monotonicity_violations += 1
                rep.witnesses.append({"sample": i, "J(s)": j, "J(s')": jb})
    return rep


def normalization_identity(sigma: SemiNorm, *, seed: int = 0):
    """``J^sigma(|.|)`` against the inscribed-Riemannian value of ``sigma``.

    The left side runs the generic ascent without the John warm start, the
    right side the John-ellipsoid solve, so the two share no code path.
    Returns ``(lhs, rhs, relative residual)``.
    """
    n = sigma.dim
    lhs = jacobian(generic_sigma(sigma), euclidean(n), method="direct", seed=seed).value
    rhs = jacobian(INSCRIBED_RIEMANNIAN, sigma).value
    return lhs, rhs, abs(lhs - rhs) / rhs
