"""Desk-scale rectifiable currents ``T = sum_i (phi_i)_# [[theta_i]]``.

A current acts on pairs ``(f, pi)`` by

    T(f, pi) = sum_i  integral over K_i  theta_i(p) f(phi_i(p)) det D_p(pi o phi_i) dp.

Masses are measured with respect to the Lipschitz norm
``L^sigma(pi) = Lip(pi : (R^m, N) -> (R^n, sigma))``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy
from scipy.optimize import linprog

from .finsler import Atlas, Chart, chart_integral, sample_chart, weighted_volume
from .jacobians import generic_sigma, sigma_jacobian
from .metric_diff import LipschitzMap, affine_map, jacobian_matrices
from .norms import (
    Ellipsoidal,
    PolytopeFacets,
    SemiNorm,
    ball_volume,
    euclidean,
    is_polytope,
    linf,
    op_norm,
    polar,
    polytope_vertices,
    reduce_norm,
    scaled,
    pullback,
    unit_ball_volume,
)
from .quadrature import Preimage, Region, cell_labels, default_resolution


# --------------------------------------------------------------------------
# multiplicities


@dataclass(frozen=True, eq=False)
class Multiplicity:
    """Vectorized ``theta : (k, n) -> (k,)`` plus the flags quadrature needs."""

    func: Callable
    smooth: bool = True
    spec: object = None

    def __call__(self, P):
        return np.broadcast_to(np.asarray(self.func(np.atleast_2d(P)), dtype=float), (len(np.atleast_2d(P)),))

    def __neg__(self):
        return Multiplicity(lambda P: -self(P), self.smooth)

    def masked(self, region: Region) -> "Multiplicity":
        return Multiplicity(lambda P: self(P) * region.contains(P), False)

    def abs(self) -> "Multiplicity":
        return Multiplicity(lambda P: np.abs(self(P)), self.smooth)


def constant(c: float) -> Multiplicity:
    c = float(c)
    return Multiplicity(lambda P: np.full(len(P), c), True, c)


def piecewise(pieces, default: float = 0.0) -> Multiplicity:
    """``[(Box, value), ...]``; the first box containing ``p`` wins."""
    pieces = [(b, float(v)) for b, v in pieces]

    def func(P):
        out = np.full(len(P), float(default))
        done = np.zeros(len(P), dtype=bool)
        for b, v in pieces:
            hit = b.contains(P) & ~done
            out[hit] = v
            done |= hit
        return out

    spec = {"pieces": [[b.to_json(), v] for b, v in pieces], "default": default}
    return Multiplicity(func, False, spec)


def expression(text: str, dim: int) -> Multiplicity:
    """Closed-form ``theta`` in the variables ``x0, x1, ...`` (``x, y, z`` also accepted)."""
    names = [f"x{i}" for i in range(dim)]
    aliases = dict(zip("xyz", names)) if dim <= 3 else {}
    syms = sympy.symbols(names)
    local = {n: s for n, s in zip(names, syms)}
    local.update({a: local[n] for a, n in aliases.items()})
    try:
        expr = sympy.sympify(text, locals=local)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot parse multiplicity {text!r}: {exc}") from exc
    if not expr.free_symbols <= set(syms):
        raise ValueError(f"unknown symbols in multiplicity {text!r}")
    fn = sympy.lambdify(syms, expr, "numpy")
    return Multiplicity(lambda P: fn(*P.T), True, text)


def _as_multiplicity(theta) -> Multiplicity:
    if isinstance(theta, Multiplicity):
        return theta
    if callable(theta):
        return Multiplicity(theta)
    return constant(theta)


# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeskCurrent:
    atlas: Atlas
    thetas: tuple
    sigma: SemiNorm

    def __post_init__(self):
        thetas = tuple(_as_multiplicity(t) for t in self.thetas)
        if len(thetas) != len(self.atlas.charts):
            raise ValueError("need one multiplicity per chart")
        if self.sigma.dim != self.atlas.dim:
            raise ValueError("sigma must live on R^n with n the chart dimension")
        object.__setattr__(self, "thetas", thetas)

    @property
    def dim(self) -> int:
        return self.atlas.dim

    @property
    def target_dim(self) -> int:
        return self.atlas.target_dim

    def with_sigma(self, sigma: SemiNorm) -> "DeskCurrent":
        return DeskCurrent(self.atlas, self.thetas, sigma)

    @property
    def smooth(self) -> bool:
        return all(t.smooth for t in self.thetas) and all(c.indicator is None for c in self.atlas.charts)


@dataclass(frozen=True, eq=False)
class TestForm:
    """A pair ``(f, pi)``: bounded Lipschitz ``f`` on the target, ``pi`` into ``(R^n, sigma)``."""

    f: Callable
    pi: LipschitzMap
    L_sigma_value: float | None = None
    f_smooth: bool = True


def unit_function(value: float = 1.0) -> Callable:
    return lambda X: np.full(len(np.atleast_2d(X)), float(value))


def current_from_charts(charts, thetas, sigma) -> DeskCurrent:
    return DeskCurrent(Atlas(tuple(charts)), tuple(thetas), sigma)


# --------------------------------------------------------------------------
# evaluation


def _form_weight(T: DeskCurrent, i: int, w: TestForm):
    chart, theta = T.atlas.charts[i], T.thetas[i]
    comp = w.pi.compose(chart.map)

    def weight(ch, cs):
        out = np.zeros(len(cs.P))
        idx = np.flatnonzero(cs.mask)
        if len(idx) == 0:
            return out
        Dc = jacobian_matrices(comp, cs.P[idx], cs.h)
        vals = theta(cs.P[idx]) * np.asarray(w.f(cs.X[idx]), dtype=float) * np.linalg.det(Dc)
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite integrand")
        out[idx] = vals
        return out

    return weight


def evaluate(T: DeskCurrent, w: TestForm, quad: int | None = None, A: Region | None = None,
             with_error: bool = False):
    """``T(f, pi)`` (restricted to ``A`` when given)."""
    if w.pi.domain_dim != T.target_dim or w.pi.target_dim != T.dim:
        raise ValueError("test map must go from the target space to R^n")
    total, err = 0.0, 0.0
    smooth = T.smooth and w.f_smooth and A is None
    for i, chart in enumerate(T.atlas.charts):
        v, e = chart_integral(chart, _form_weight(T, i, w), quad, A, smooth)
        total += v
        err += e
    return (total, err) if with_error else total


def lipschitz_norm(pi: LipschitzMap, source: SemiNorm, sigma: SemiNorm, points=None) -> float:
    """``L^sigma(pi)``: operator norm of ``D pi`` from ``source`` to ``sigma``.

    Exact for affine ``pi``; otherwise the supremum over ``points``.
    """
    if pi.is_linear:
        return op_norm(pi.matrix, source, sigma)
    if points is None:
        raise ValueError("sample points are required for a non-linear map")
    P = np.atleast_2d(points)
    D = jacobian_matrices(pi, P, 1e-6)
    return float(max(op_norm(Dk, source, sigma) for Dk in D))


def form(f, pi: LipschitzMap, source: SemiNorm, points=None, f_smooth: bool = True) -> TestForm:
    return TestForm(f, pi, lipschitz_norm(pi, source, pi.target_norm, points), f_smooth)


# --------------------------------------------------------------------------
# masses


def _abs_weights(T: DeskCurrent):
    return [t.abs() for t in T.thetas]


def mass_by_formula(T: DeskCurrent, A: Region | None = None, quad: int | None = None, *,
                    sigma: SemiNorm | None = None, seed: int = 0):
    """``integral over A of |theta| d mu^sigma``; returns a :class:`VolumeEstimate`."""
    sigma = T.sigma if sigma is None else sigma
    smooth = T.smooth and A is None
    return weighted_volume(T.atlas, generic_sigma(sigma), A, quad, _abs_weights(T), smooth, seed)


def _hahn_banach_rows(F_plane: np.ndarray, G: np.ndarray, N: SemiNorm) -> np.ndarray | None:
    """Rows ``r`` with ``r G = F_plane row`` and minimal dual norm ``N*(r)``.

    Each coordinate of ``F G^+`` is a functional on the image plane; the
    linear program extends it to all of ``R^m`` without increasing its
    Lipschitz constant (possible for polytopal ``N``).
    """
    if not is_polytope(reduce_norm(N)):
        return None
    V = polytope_vertices(reduce_norm(N))
    m = G.shape[0]
    rows = []
    for target in F_plane:
        # variables (r, t): min t  s.t. |V r| <= t,  G^T r = target
        c = np.r_[np.zeros(m), 1.0]
        A_ub = np.block([[V, -np.ones((len(V), 1))], [-V, -np.ones((len(V), 1))]])
        A_eq = np.hstack([G.T, np.zeros((G.shape[1], 1))])
        res = linprog(c, A_ub, np.zeros(2 * len(V)), A_eq, target, bounds=[(None, None)] * m + [(0, None)],
                      method="highs")
        if not res.success:
            return None
        rows.append(res.x[:m])
    return np.array(rows)


def optimal_test_map(T: DeskCurrent, i: int, seed: int = 0) -> LipschitzMap:
    """``pi*`` for a linear chart: ``F* o phi^{-1}`` extended to the target.

    ``F*`` maximizes ``|det|`` subject to ``F(B_{N o G}) in B_sigma``.  For
    square charts ``pi* = F* G^{-1}``; for embedded charts each coordinate is
    extended by Hahn-Banach when ``sigma`` is the max norm, otherwise the
    pseudo-inverse extension is used.  The result is rescaled to
    ``L^sigma <= 1``.
    """
    f = T.atlas.charts[i].map
    if not f.is_linear or not f.has_constant_norm:
        raise ValueError("optimal test maps are constructed for linear charts only")
    return _tangent_test_map(f.matrix, f.offset, f.target_norm, T.sigma, seed)


def _tangent_test_map(G: np.ndarray, b: np.ndarray, N: SemiNorm, sigma: SemiNorm, seed: int = 0) -> LipschitzMap:
    n = G.shape[1]
    res = sigma_jacobian(sigma, pullback(N, G), seed=seed)
    F = res.optimizer if res.optimizer is not None else np.zeros((n, n))
    m = G.shape[0]
    if m == n:
        M = F @ np.linalg.inv(G)
    else:
        M = None
        sr = reduce_norm(sigma)
        if isinstance(sr, PolytopeFacets) and np.allclose(np.abs(sr.H), np.eye(n)):
            M = _hahn_banach_rows(F, G, N)
            if M is not None:
                M = np.linalg.solve(sr.H, M)
        if M is None:
            M = F @ np.linalg.pinv(G)
    pi = affine_map(M, -M @ b, sigma)
    L = op_norm(M, N, sigma)
    if L > 1.0:
        pi = affine_map(M / L, -M @ b / L, sigma)
    return pi


def tangent_test_maps(T: DeskCurrent, i: int, blocks: int, seed: int = 0) -> list:
    """``pi*`` of the tangent chart at each block centre of a curved chart."""
    chart = T.atlas.charts[i]
    f = chart.map
    box = chart.box
    k = np.indices((blocks,) * chart.dim).reshape(chart.dim, -1).T
    centres = box.lo + (k + 0.5) * (box.hi - box.lo) / blocks
    if chart.indicator is not None:
        centres = centres[chart.indicator.contains(centres)]
    if len(centres) == 0:
        return []
    D = jacobian_matrices(f, centres, 1e-6 * box.diameter)
    X = f(centres)
    out = []
    for c, Dc, x in zip(centres, D, X):
        if abs(np.linalg.det(Dc.T @ Dc)) > 1e-20:
            out.append(_tangent_test_map(Dc, x - Dc @ c, f.norm_at(x), T.sigma, seed))
    return out


def _normalized(pi: LipschitzMap, source: SemiNorm, sigma: SemiNorm, points) -> LipschitzMap | None:
    L = lipschitz_norm(pi, source, sigma, points)
    if L <= 0:
        return None
    if pi.is_linear:
        return affine_map(pi.matrix / L, pi.offset / L, sigma)
    func = pi.func
    return LipschitzMap(pi.domain_dim, pi.target_dim, lambda X: func(X) / L, sigma)


@dataclass
class DualityReport:
    value: float
    formula: float
    candidates: int
    best_candidate: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"mass": self.value, "method": "duality", "formula": self.formula,
                "candidates": self.candidates}


def mass_by_duality(T: DeskCurrent, A: Region | None = None, n_partitions: int = 4, candidates=None,
                    quad: int | None = None, include_optimal: bool = True, seed: int = 0) -> float:
    """Lower bound for ``||T||(A)`` from explicit test forms.

    Each chart grid is cut into ``n_partitions^n`` blocks.  Without
    explicit ``candidates`` the optimal map of each linear chart is used,
    and for curved charts the optimal maps of the tangent charts at the
    block centres.  On every block
    and for every candidate ``pi`` (rescaled to ``L^sigma(pi) = 1``) the form
    ``(sign * 1_block, pi)`` is evaluated, with the sign chosen pointwise.
    The best candidate per block is kept and the block values summed;
    blocks are disjoint in the target since charts are injective with
    disjoint images.
    """
    candidates = list(candidates or [])
    if include_optimal:
        for i, c in enumerate(T.atlas.charts):
            if not c.map.has_constant_norm:
                continue
            if c.map.is_linear:
                candidates.append(optimal_test_map(T, i, seed))
            else:
                candidates += tangent_test_maps(T, i, n_partitions, seed)
    if not candidates:
        raise ValueError("mass by duality needs at least one candidate test map")
    total = 0.0
    for i, chart in enumerate(T.atlas.charts):
        source = chart.map.target_norm if chart.map.has_constant_norm else None
        quad_i = quad or default_resolution(chart.dim)
        cs = sample_chart(chart, quad_i, A)
        labels = cell_labels(chart.box, quad_i, n_partitions)
        nblocks = n_partitions**chart.dim
        best = np.zeros(nblocks)
        theta = T.thetas[i](cs.P)
        for pi in candidates:
            if source is None:
                raise ValueError("duality needs a constant target norm")
            pin = _normalized(pi, source, T.sigma, cs.X)
            if pin is None:
                continue
            comp = pin.compose(chart.map)
            dets = np.zeros(len(cs.P))
            idx = np.flatnonzero(cs.mask)
            if len(idx):
                dets[idx] = np.linalg.det(jacobian_matrices(comp, cs.P[idx], cs.h))
            # f = sign(theta det) on the block: pointwise measurable sign
            contrib = np.abs(theta * dets) * cs.mask * cs.w
            best = np.maximum(best, np.bincount(labels, contrib, nblocks))
        total += float(best.sum())
    return total


def _row_frame_max(rows: np.ndarray) -> float:
    n = rows.shape[1]
    best = 0.0
    for combo in itertools.combinations(range(len(rows)), n):
        best = max(best, abs(np.linalg.det(rows[list(combo)])))
    return best


def classical_mass(T: DeskCurrent, A: Region | None = None, quad: int | None = None) -> float:
    """Mass with every coordinate of ``pi`` 1-Lipschitz, for linear charts.

    For a chart ``phi = G p + b`` into ``(R^m, N)`` the admissible
    ``D(pi o phi)`` are the matrices whose rows lie in the dual ball of
    ``s = N o G``; ``|det|`` is multilinear in the rows, so the supremum
    sits at polar vertices (polytopal ``s``) or is ``sqrt(det Q)`` by
    Hadamard's inequality (ellipsoidal ``s``).
    """
    total = 0.0
    for i, chart in enumerate(T.atlas.charts):
        f = chart.map
        if not f.is_linear or not f.has_constant_norm:
            raise ValueError("classical mass is computed for linear charts only")
        s = reduce_norm(pullback(f.target_norm, f.matrix))
        if isinstance(s, Ellipsoidal):
            density = float(np.sqrt(np.linalg.det(s.Q)))
        elif is_polytope(s):
            density = _row_frame_max(polytope_vertices(polar(s)))
        else:
            raise ValueError("classical mass needs an ellipsoidal or polytopal chart norm")
        quad_i = quad or default_resolution(chart.dim)
        cs = sample_chart(chart, quad_i, A)
        total += float(np.sum(np.abs(T.thetas[i](cs.P)) * cs.mask) * cs.w * density)
    return total


# --------------------------------------------------------------------------
# comparisons


def volume_normalized(sigma: SemiNorm) -> SemiNorm:
    """``sigma`` rescaled so that its unit ball has the volume of the Euclidean ball."""
    n = sigma.dim
    lam = (unit_ball_volume(sigma).value / ball_volume(n)) ** (1 / n)
    return scaled(sigma, lam)


def john_normalized(sigma: SemiNorm) -> SemiNorm:
    """``sigma`` rescaled so that ``J^sigma(|.|) = 1`` (John ellipsoid of volume omega_n)."""
    n = sigma.dim
    c = sigma_jacobian(sigma, euclidean(n)).value
    return scaled(sigma, c ** (1 / n))


@dataclass
class MassComparison:
    n: int
    m_inf: float
    m_2: float
    m_sigma_volume: float
    m_sigma_john: float
    m_sigma_raw: float
    checks: dict
    witness: object = None

    @property
    def holds(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m_inf": self.m_inf,
            "m_2": self.m_2,
            "m_sigma": self.m_sigma_raw,
            "m_sigma_volume_normalized": self.m_sigma_volume,
            "m_sigma_john_normalized": self.m_sigma_john,
            "checks": self.checks,
            "bounds_hold": self.holds,
            "witness": self.witness,
        }


def compare_masses(T: DeskCurrent, A: Region | None = None, quad: int | None = None, tol: float = 1e-9):
    """Masses of ``T`` under ``sigma``, the max norm and the Euclidean norm.

    Two normalizations of ``sigma`` are used.  The ``C = n^n`` comparison
    with the max-norm mass takes ``Leb(B_sigma) = omega_n``.  The chain
    ``m_2 <= m_sigma <= n^n m_2`` takes ``J^sigma(|.|) = 1``; under volume
    normalization that chain can fail (see the notes), so it is reported
    but not asserted there.
    """
    n = T.dim
    C = float(n**n)
    m_inf = mass_by_formula(T, A, quad, sigma=linf(n)).value
    m_2 = mass_by_formula(T, A, quad, sigma=euclidean(n)).value
    m_raw = mass_by_formula(T, A, quad).value
    m_vol = mass_by_formula(T, A, quad, sigma=volume_normalized(T.sigma)).value
    m_john = mass_by_formula(T, A, quad, sigma=john_normalized(T.sigma)).value
    up = 1 + tol
    checks = {
        "max_norm_lower": m_vol / C <= m_inf * up + tol,
        "max_norm_upper": m_inf <= C * m_vol * up + tol,
        "chain_lower": m_2 <= m_john * up + tol,
        "chain_upper": m_john <= C * m_2 * up + tol,
        "linf_chain": m_2 <= m_inf * up + tol and m_inf <= C * m_2 * up + tol,
    }
    witness = None if all(checks.values()) else getattr(A, "to_json", lambda: repr(A))() if A else "all"
    return MassComparison(n, m_inf, m_2, m_vol, m_john, m_raw, checks, witness)


# --------------------------------------------------------------------------
# push-forward and restriction


def pushforward(T: DeskCurrent, g: LipschitzMap) -> DeskCurrent:
    if g.domain_dim != T.target_dim:
        raise ValueError("push-forward map must start at the current's target space")
    charts = []
    for c in T.atlas.charts:
        lo, hi = c.bilip
        lip = g.declared_lip
        charts.append(Chart(c.box, g.compose(c.map), c.indicator, (lo, hi * lip) if lip else (lo, hi)))
    return DeskCurrent(Atlas(tuple(charts)), T.thetas, T.sigma)


def restrict(T: DeskCurrent, A: Region) -> DeskCurrent:
    """``T`` restricted to the target set ``A``: multiplicities masked by ``1_A o phi_i``."""
    thetas = tuple(t.masked(Preimage(A, c.map)) for t, c in zip(T.thetas, T.atlas.charts))
    return DeskCurrent(T.atlas, thetas, T.sigma)
