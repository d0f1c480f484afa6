"""Volume densities on simple n-vectors of a normed R^m and convexity checks.

A simple vector ``a = v_1 ^ ... ^ v_n`` is stored through its spanning
vectors.  The density induced by a Jacobian ``J`` is

    phi(a) = J(N restricted to span(v)) * |det R|,

with ``V = U R`` a thin QR factorization: ``U`` gives orthonormal
coordinates on the plane and ``R`` the coordinates of the ``v_i``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .jacobians import JacobianKind, jacobian
from .norms import DEG_TOL, SemiNorm, pullback


@dataclass(frozen=True, eq=False)
class SimpleVector:
    vectors: np.ndarray  # (n, m), one spanning vector per row
    ambient_norm: SemiNorm

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        n, m = V.shape
        if m <= n:
            raise ValueError("simple n-vectors need an ambient dimension m > n")
        if m != self.ambient_norm.dim:
            raise ValueError("ambient norm dimension does not match the vectors")
        object.__setattr__(self, "vectors", V)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def m(self) -> int:
        return self.vectors.shape[1]

    def wedge(self) -> np.ndarray:
        return wedge(self.vectors)


def wedge(V: np.ndarray) -> np.ndarray:
    """Plücker coordinates: the n x n minors of the rows of ``V``, lexicographic."""
    V = np.atleast_2d(V)
    n, m = V.shape
    return np.array([np.linalg.det(V[:, list(c)]) for c in itertools.combinations(range(m), n)])


def wedge_index(m: int, n: int = 2) -> list:
    return list(itertools.combinations(range(m), n))


def slice_chart(V: np.ndarray):
    """``(U, R)`` with ``V^T = U R``; ``U`` is m x n orthonormal."""
    U, R = np.linalg.qr(np.asarray(V, dtype=float).T)
    return U, R


@dataclass(frozen=True, eq=False)
class Density:
    """A density ``phi`` on simple n-vectors, given as a function of the spanning rows."""

    func: Callable
    name: str = ""

    def __call__(self, V) -> float:
        return float(self.func(np.atleast_2d(np.asarray(V, dtype=float))))


def induced_density(kind: JacobianKind, ambient: SemiNorm, seed: int = 0) -> Density:
    def func(V):
        U, R = slice_chart(V)
        d = abs(float(np.linalg.det(R)))
        if d <= DEG_TOL:
            return 0.0
        return jacobian(kind, pullback(ambient, U), seed=seed).value * d

    return Density(func, kind.name)


def density(kind: JacobianKind, sv: SimpleVector, seed: int = 0) -> float:
    return induced_density(kind, sv.ambient_norm, seed)(sv.vectors)


def crafted_nonconvex_density(base: Density, amplitude: float = 0.5) -> Density:
    """``phi * (1 + amplitude * sin(2 atan2(a_12, a_13)))``.

    The doubled angle keeps ``phi(-a) = phi(a)``; the oscillation in the
    wedge direction breaks convexity of the homogeneous extension.
    Requires ``m >= 3``.
    """

    def func(V):
        a = wedge(V)
        theta = np.arctan2(a[0], a[1])
        return base(V) * (1 + amplitude * np.sin(2 * theta))

    return Density(func, f"nonconvex({base.name})")


# --------------------------------------------------------------------------


def random_decomposition(V: np.ndarray, pieces: int, rng: np.random.Generator) -> list:
    """Split ``v_1 ^ v_2`` into ``pieces`` simple 2-vectors with the same wedge sum.

    Repeatedly pick a piece ``(x, y)`` and a random vector ``w``; replace it
    by ``(x, y - w)`` and ``(x, w)`` (or the same on the first factor).  This
    is a piecewise-linear cut of the parallelogram, re-glued in wedge
    coordinates; ``w`` is drawn on the scale of the piece so that the cuts
    leave its plane.
    """
    parts = [np.array(V, dtype=float)]
    while len(parts) < pieces:
        k = int(rng.integers(len(parts)))
        x, y = parts.pop(k)
        scale = max(np.linalg.norm(x), np.linalg.norm(y))
        w = rng.normal(size=x.shape) * scale
        if rng.random() < 0.5:
            parts += [np.array([x, y - w]), np.array([x, w])]
        else:
            parts += [np.array([x - w, y]), np.array([w, y])]
    return parts


def _hull_decomposition(P: np.ndarray, k: int):
    """Coefficients ``lam`` with ``P[k] = sum lam_j P[j]`` (j != k) and minimal ``sum |lam_j|``."""
    others = np.delete(np.arange(len(P)), k)
    Q = P[others]
    c = np.ones(2 * len(Q))
    res = linprog(c, A_eq=np.hstack([Q.T, -Q.T]), b_eq=P[k], bounds=(0, None), method="highs")
    if not res.success:
        return None
    lam = res.x[: len(Q)] - res.x[len(Q):]
    keep = np.abs(lam) > 1e-12
    return others[keep], lam[keep]


def envelope_check(phi: Density, ambient_dim: int, count: int, rng: np.random.Generator, tol: float = 1e-6,
                   probes: int = 200):
    """Compare ``phi`` with the convex hull of its sampled unit level set.

    Sample simple vectors ``a_j``, normalize to ``p_j = a_j / phi(a_j)``, and
    write each probe ``p_k`` as a combination of the others with least
    ``l1`` weight ``g_k``.  ``g_k < 1`` means ``p_k`` is interior to the hull;
    the combination is then an explicit decomposition of ``a_k`` whose
    pieces have total density ``g_k phi(a_k)``.  Each such decomposition is
    re-evaluated directly before it counts.

    Returns ``(max_gap, decompositions tested, violations, witnesses)``.
    """
    Vs, P = [], []
    for _ in range(count):
        V = rng.normal(size=(2, ambient_dim))
        val = phi(V)
        if val > 0:
            Vs.append(V)
            P.append(wedge(V) / val)
    P = np.array(P)
    max_gap, tested, violations, witnesses = 0.0, 0, 0, []
    for k in range(min(len(P), probes)):
        dec = _hull_decomposition(P, k)
        if dec is None:
            continue
        idx, lam = dec
        max_gap = max(max_gap, 1.0 - float(np.abs(lam).sum()))
        whole = phi(Vs[k])
        parts = []
        for j, l in zip(idx, lam):
            c = l * whole / phi(Vs[j])
            parts.append(Vs[j] * np.array([[c], [1.0]]))
        tested += 1
        total = sum(phi(p) for p in parts)
        if total > 0 and (whole - total) / total > tol:
            violations += 1
            if len(witnesses) < 10:
                witnesses.append({"source": "hull", "a": Vs[k].tolist(), "parts": [p.tolist() for p in parts],
                                  "phi(a)": whole, "sum": total,
                                  "wedge_residual": float(np.abs(wedge(Vs[k]) - sum(wedge(p) for p in parts)).max())})
    return max_gap, tested, violations, witnesses


@dataclass
class ConvexityReport:
    trials: int  # random-split decompositions
    split_violations: int
    max_gap: float
    max_excess: float
    split_witnesses: list = field(default_factory=list)
    hull_tested: int = 0  # decompositions read off the sampled convex hull
    hull_violations: int = 0
    hull_witnesses: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return self.split_violations + self.hull_violations

    @property
    def witnesses(self) -> list:
        return self.split_witnesses + self.hull_witnesses

    def to_json(self) -> dict:
        return {"trials": self.trials + self.hull_tested, "violations": self.violations,
                "max_gap": self.max_gap, "max_excess": self.max_excess,
                "split_trials": self.trials, "split_violations": self.split_violations,
                "hull_trials": self.hull_tested, "hull_violations": self.hull_violations,
                "witnesses": self.witnesses[:10]}


def check_semi_ellipticity(kind_or_density, ambient: SemiNorm, trials: int = 1000, decomp_size: int = 3,
                           seed: int = 0, tol: float = 1e-6, envelope_samples: int = 400) -> ConvexityReport:
    """Sample ``phi(a) <= sum phi(a_i)`` over decompositions ``a = sum a_i``.

    Two families are tested: random piecewise-linear splits
    (:func:`random_decomposition`) and decompositions read off the convex
    hull of the sampled unit level set (:func:`envelope_check`).  A
    violation is a relative excess ``(phi(a) - sum phi(a_i)) / sum phi(a_i)``
    above ``tol``.
    """
    m = ambient.dim
    if m not in (3, 4):
        raise ValueError("convexity checks are implemented for 2-vectors in R^3 and R^4")
    if decomp_size < 2:
        raise ValueError("a decomposition needs at least two pieces")
    phi = kind_or_density if isinstance(kind_or_density, Density) else induced_density(kind_or_density, ambient, seed)
    rng = np.random.default_rng(seed)
    violations, max_excess, witnesses = 0, -np.inf, []
    for t in range(trials):
        V = rng.normal(size=(2, m))
        parts = random_decomposition(V, decomp_size, rng)
        whole = phi(V)
        total = sum(phi(p) for p in parts)
        if total <= 0:
            continue
        excess = (whole - total) / total
        max_excess = max(max_excess, excess)
        if excess > tol:
            violations += 1
            if len(witnesses) < 10:
                witnesses.append({"trial": t, "a": V.tolist(), "parts": [p.tolist() for p in parts],
                                  "phi(a)": whole, "sum": total})
    gap, tested, hull_viol, hull_wit = 0.0, 0, 0, []
    if envelope_samples:
        gap, tested, hull_viol, hull_wit = envelope_check(phi, m, envelope_samples, rng, tol)
    return ConvexityReport(trials, violations, gap, float(max_excess), witnesses, tested, hull_viol, hull_wit)


def gram_density(V) -> float:
    V = np.atleast_2d(V)
    return float(np.sqrt(max(np.linalg.det(V @ V.T), 0.0)))

