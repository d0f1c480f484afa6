"""Reproduction harness: one function per acceptance criterion.

Every check returns a :class:`CriterionResult` carrying the measured
quantities, the tolerance it was held to, and its wall-clock time against
the budget.  A criterion passes only if both the numbers and the runtime
are within bounds.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import currents as cur
from .density import check_semi_ellipticity, crafted_nonconvex_density, induced_density
from .finsler import Atlas, Chart, chart_independence, linear_chart, weighted_volume
from .jacobians import (
    ALL_FIXED_KINDS,
    BUSEMANN,
    CIRCUMSCRIBED_RIEMANNIAN,
    INSCRIBED_RIEMANNIAN,
    MASS_STAR,
    check_axioms,
    generic_sigma,
    jacobian,
    normalization_identity,
)
from .metric_diff import LipschitzMap, affine_map, area_formula_check, polynomial_map
from .norms import (
    euclidean,
    l1,
    linf,
    op_norm,
    random_bijection,
    random_ellipsoid,
    random_exact_norm,
    random_polytope,
)
from .quadrature import Box


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    runtime: float
    budget: float
    tolerance: str
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number}. {self.title} ({self.runtime:.1f}s / {self.budget:.0f}s) {self.tolerance}"

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "runtime_s": self.runtime, "budget_s": self.budget, "tolerance": self.tolerance,
                "details": self.details}


def _timed(number, title, budget, tolerance, body):
    t0 = time.perf_counter()
    ok, details = body()
    dt = time.perf_counter() - t0
    return CriterionResult(number, title, bool(ok and dt < budget), dt, budget, tolerance, details)


# --------------------------------------------------------------------------
# 1


def criterion_golden(seed: int = 0) -> CriterionResult:
    """Four Jacobian values against closed-form oracles, each under 5 s."""

    def body():
        # determinant bound: |det F| Leb(B_1) <= Leb(B_inf) and F = [[1,1],[-1,1]] attains it
        F = np.array([[1.0, 1.0], [-1.0, 1.0]])
        assert op_norm(F, l1(2), linf(2)) <= 1 + 1e-12
        cases = [
            ("mass-star(l1)", MASS_STAR, l1(2), 4.0 / 2.0),
            ("circumscribed-riemannian(l1)", CIRCUMSCRIBED_RIEMANNIAN, l1(2), 1.0),
            ("busemann(linf)", BUSEMANN, linf(2), math.pi / 4),
            ("inscribed-riemannian(l1)", INSCRIBED_RIEMANNIAN, l1(2), 0.5),
        ]
        rows, ok = [], True
        for name, kind, s, oracle in cases:
            t0 = time.perf_counter()
            v = jacobian(kind, s, seed=seed).value
            dt = time.perf_counter() - t0
            good = abs(v - oracle) <= 1e-6 and dt < 5
            ok &= good
            rows.append({"case": name, "value": v, "oracle": oracle, "abs_err": abs(v - oracle), "seconds": dt,
                         "pass": bool(good)})
        return ok, {"cases": rows}

    return _timed(1, "Jacobian golden values", 20, "abs err <= 1e-6, < 5 s each", body)


# --------------------------------------------------------------------------
# 2


def criterion_normalization(seed: int = 0) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        rows, worst = [], 0.0
        for n in (2, 3):
            sigmas = [("l1", l1(n)), ("linf", linf(n)), ("l2", euclidean(n))]
            sigmas += [(f"polytope{i}", random_polytope(n, rng)) for i in range(3)]
            sigmas += [(f"ellipsoid{i}", random_ellipsoid(n, rng)) for i in range(3)]
            for name, sg in sigmas:
                lhs, rhs, res = normalization_identity(sg, seed=seed)
                worst = max(worst, res)
                rows.append({"n": n, "sigma": name, "lhs": lhs, "rhs": rhs, "residual": res})
        return worst <= 1e-4, {"max_residual": worst, "cases": rows}

    return _timed(2, "Normalization identity J^sigma(|.|) = J^ir(sigma)", 60, "relative residual <= 1e-4", body)


# --------------------------------------------------------------------------
# 3


def axiom_samples(count: int, n: int, rng: np.random.Generator):
    return [(random_exact_norm(n, rng), random_bijection(n, rng)) for _ in range(count)]


def criterion_axioms(seed: int = 0, count: int = 200) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        samples = axiom_samples(count, 2, rng)
        rows, ok = [], True
        for kind in ALL_FIXED_KINDS:
            rep = check_axioms(kind, samples, seed=seed)
            good = rep.max_transformation_residual <= 1e-6 and rep.monotonicity_violations == 0
            ok &= good
            row = rep.to_json()
            row["pass"] = bool(good)
            rows.append(row)
        return ok, {"kinds": rows}

    return _timed(3, "Jacobian axiom sweep (200 pairs per kind, n=2)", 120,
                  "transformation residual <= 1e-6, 0 monotonicity violations", body)


# --------------------------------------------------------------------------
# 4


def _linear_current(rng, sigma, target=None, piecewise_theta=False):
    N = target if target is not None else random_polytope(2, rng)
    G = random_bijection(2, rng, cond=20)
    chart = linear_chart(G, Box([0, 0], [1, 1]), N, rng.normal(size=2))
    if piecewise_theta:
        theta = cur.piecewise([(Box([0, 0], [0.5, 1]), 2.0), (Box([0.5, 0], [1, 1]), -1.0)])
    else:
        theta = cur.constant(float(rng.uniform(0.5, 2.0)))
    return cur.DeskCurrent(Atlas((chart,)), (theta,), sigma)


def criterion_duality(seed: int = 0, count: int = 10) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        rows, worst, worst_excess = [], 0.0, -np.inf
        for i in range(count):
            base = _linear_current(rng, euclidean(2), piecewise_theta=bool(i % 2))
            for sname, sg in (("l2", euclidean(2)), ("linf", linf(2))):
                T = base.with_sigma(sg)
                formula = cur.mass_by_formula(T).value
                dual = cur.mass_by_duality(T, n_partitions=4)
                rel = abs(dual - formula) / formula
                excess = (dual - formula) / formula
                worst, worst_excess = max(worst, rel), max(worst_excess, excess)
                rows.append({"current": i, "sigma": sname, "formula": formula, "duality": dual, "rel_diff": rel})
        ok = worst <= 1e-3 and worst_excess <= 1e-3
        return ok, {"max_rel_diff": worst, "max_excess": worst_excess, "cases": rows}

    return _timed(4, "Mass formula vs duality with pi*", 180, "relative diff <= 1e-3, excess <= 1e-3", body)


# --------------------------------------------------------------------------
# 5


def criterion_comparisons(seed: int = 0, count: int = 50) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        # max-norm mass against the coordinatewise classical mass
        classical = []
        for i in range(10):
            T = _linear_current(rng, linf(2), target=random_exact_norm(2, rng))
            a, b = cur.mass_by_formula(T).value, cur.classical_mass(T)
            classical.append(abs(a - b) / b)
        # n^n comparison with the max-norm mass, and the Euclidean chain
        violations = {"max_norm_lower": 0, "max_norm_upper": 0, "chain_lower": 0, "chain_upper": 0}
        chain_vol_violations, ratios = 0, []
        for i in range(count):
            sg = random_exact_norm(2, rng)
            T = _linear_current(rng, sg, target=random_exact_norm(2, rng))
            rep = cur.compare_masses(T)
            for k in violations:
                violations[k] += not rep.checks[k]
            chain_vol_violations += not (rep.m_2 <= rep.m_sigma_volume * (1 + 1e-9))
            ratios.append(rep.m_sigma_volume / rep.m_inf)
        E = cur.DeskCurrent(Atlas((linear_chart(np.eye(2)),)), (cur.constant(1.0),), euclidean(2))
        m2_euclid = cur.mass_by_formula(E, sigma=euclidean(2)).value
        ok = max(classical) <= 1e-6 and sum(violations.values()) == 0 and abs(m2_euclid - 1) <= 1e-9
        return ok, {
            "classical_max_rel_diff": max(classical),
            "violations": violations,
            "sigma_over_inf_ratio_range": [min(ratios), max(ratios)],
            "chain_under_volume_normalization_failures": chain_vol_violations,
            "euclidean_identity_m2": m2_euclid,
        }

    return _timed(5, "Comparison inequalities (classical mass, C = n^n, chain)", 120,
                  "classical rel diff <= 1e-6; 0 violations", body)


# --------------------------------------------------------------------------
# 6


def _disk_atlases():
    from .specs import atlas_from_json

    target = {"kind": "ellipsoid", "Q": [[1, 0], [0, 1]]}
    polar = atlas_from_json({"charts": [{"box": [[0, 0], [1, 2 * math.pi]], "target_norm": target,
                                         "map": {"kind": "expr", "exprs": ["x0*cos(x1)", "x0*sin(x1)"]}}]})
    rotated = atlas_from_json({"charts": [{"box": [[-1, -1], [1, 1]], "target_norm": target,
                                           "map": {"kind": "linear", "A": [[0.6, -0.8], [0.8, 0.6]]},
                                           "indicator": {"kind": "ball", "center": [0, 0], "radius": 1}}]})
    return polar, rotated


def criterion_chart_independence(seed: int = 0) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        N = random_polytope(2, rng)
        whole = Atlas((linear_chart(np.eye(2), Box([0, 0], [1, 1]), N),))
        halves = Atlas((linear_chart(np.eye(2), Box([0, 0], [0.5, 1]), N),
                        linear_chart(np.eye(2), Box([0.5, 0], [1, 1]), N)))
        plane = Atlas((linear_chart(np.array([[1.0, 0], [0, 1], [1, 1]]), Box.unit(2), linf(3)),))
        bent = polynomial_map([[(1, [2, 0])], [(1, [0, 1])], [(1, [2, 0]), (1, [0, 1])]], 2, linf(3))
        curved = Atlas((Chart(Box.unit(2), bent, None, (0.1, 3.0)),))
        polar, rotated = _disk_atlases()
        pairs = [
            ("square vs two halves, mass*", whole, halves, MASS_STAR, None),
            ("plane in l_inf^3: linear vs (u^2, v)", plane, curved, CIRCUMSCRIBED_RIEMANNIAN, None),
            ("disk: polar vs rotated axis chart", polar, rotated, CIRCUMSCRIBED_RIEMANNIAN, 256),
        ]
        rows, worst = [], 0.0
        for name, a, b, kind, quad in pairs:
            res, va, vb = chart_independence(a, b, kind, None, quad)
            worst = max(worst, res)
            rows.append({"pair": name, "residual": res, "volume_a": va.value, "volume_b": vb.value})
        return worst <= 1e-3, {"max_residual": worst, "pairs": rows}

    return _timed(6, "Chart independence of the Finsler volume", 60, "relative residual <= 1e-3", body)


# --------------------------------------------------------------------------
# 7


def criterion_area_formula(seed: int = 0, count: int = 20) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        rows, worst = [], 0.0
        for i in range(count):
            m = 2 if i % 2 == 0 else 3
            N = random_exact_norm(m, rng)
            G = rng.normal(size=(m, 2))
            f = affine_map(G, rng.normal(size=m), N)
            lhs, rhs, res = area_formula_check(f, Box([0, 0], [1, 1]), quad=32)
            worst = max(worst, res)
            rows.append({"m": m, "lhs": lhs, "rhs": rhs, "residual": res})
        return worst <= 1e-6, {"max_residual": worst, "cases": rows}

    return _timed(7, "Area formula on linear maps", 60, "relative residual <= 1e-6", body)


# --------------------------------------------------------------------------
# 8


def _hexagon_witness(seed: int = 0) -> dict:
    """``e12 + e13 + e23`` over l1^3: a hexagonal section against three diamonds."""
    phi = induced_density(CIRCUMSCRIBED_RIEMANNIAN, l1(3), seed)
    E = np.eye(3)
    parts = [phi(E[[0, 1]]), phi(E[[0, 2]]), phi(E[[1, 2]])]
    # orthonormal basis of the plane normal to (1, -1, 1), second vector scaled by sqrt 3
    u = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    v = np.array([-1.0, 1.0, 2.0]) / math.sqrt(6)
    whole = phi(np.array([u, math.sqrt(3) * v]))
    return {"a": "e12 + e13 + e23", "phi(a)": whole, "sum_of_parts": sum(parts), "violated": bool(whole > sum(parts))}


def criterion_convexity(seed: int = 0, trials: int = 10_000, control_trials: int = 500) -> CriterionResult:
    def body():
        rows, ok = [], True
        for name, amb in (("l_inf^3", linf(3)), ("l_1^3", l1(3))):
            rep = check_semi_ellipticity(CIRCUMSCRIBED_RIEMANNIAN, amb, trials=trials, decomp_size=3, seed=seed)
            phi = induced_density(CIRCUMSCRIBED_RIEMANNIAN, amb, seed)
            ctrl = check_semi_ellipticity(crafted_nonconvex_density(phi), amb, trials=control_trials, seed=seed + 1)
            good = rep.violations == 0 and ctrl.violations >= 1
            ok &= good
            row = {"ambient": name, "kind": CIRCUMSCRIBED_RIEMANNIAN.name, "report": rep.to_json(),
                   "control_violations": ctrl.violations, "pass": bool(good)}
            rows.append(row)
        # positive control: the mass* density over the same ambients
        ms = check_semi_ellipticity(MASS_STAR, linf(3), trials=200, seed=seed)
        return ok, {"ambients": rows, "mass_star_linf_violations": ms.violations,
                    "closed_form_witness": _hexagon_witness(seed)}

    return _timed(8, "Extendible convexity of the circumscribed Riemannian density", 300,
                  "0 violations above 1e-6; control >= 1 violation", body)


# --------------------------------------------------------------------------
# 9


def _random_form(rng, T, kind: str):
    m, n = T.target_dim, T.dim
    a, b = rng.normal(size=m), rng.uniform(0, 2 * np.pi)
    f = lambda X, a=a, b=b: np.cos(np.atleast_2d(X) @ a + b)  # noqa: E731
    if kind == "linear":
        pi = affine_map(rng.normal(size=(n, m)), rng.normal(size=n), T.sigma)
    else:
        c = rng.normal(size=(n, m))
        q = rng.normal(size=(n, m)) * 0.5
        pi = LipschitzMap(m, n, lambda X, c=c, q=q: X @ c.T + 0.5 * np.sin(X) @ q.T, T.sigma)
    return cur.TestForm(f, pi)


def _locality_currents(rng):
    lin = _linear_current(rng, random_polytope(2, rng))
    bent = polynomial_map([[(1, [1, 0]), (0.3, [2, 0])], [(1, [0, 1]), (0.2, [1, 1])]], 2, random_ellipsoid(2, rng))
    curved = cur.DeskCurrent(Atlas((Chart(Box.unit(2), bent, None, (0.3, 3.0)),)),
                             (cur.expression("1 + x*y", 2),), linf(2))
    embedded = cur.DeskCurrent(Atlas((linear_chart(rng.normal(size=(3, 2)), Box.unit(2), random_polytope(3, rng)),)),
                               (cur.constant(1.0),), euclidean(2))
    return [("linear", lin), ("curved", curved), ("embedded", embedded)]


def criterion_locality(seed: int = 0, forms: int = 100, quad: int = 32) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        rows, ok = [], True
        for name, T in _locality_currents(rng):
            bound_viol, local_viol, worst_ratio, max_local = 0, 0, 0.0, 0.0
            source = T.atlas.charts[0].map.target_norm
            for k in range(forms):
                w = _random_form(rng, T, "linear" if k % 2 == 0 else "sin")
                val, err = cur.evaluate(T, w, quad, with_error=True)
                pts = _sample_targets(T, quad)
                L = cur.lipschitz_norm(w.pi, source, T.sigma, None if w.pi.is_linear else pts)
                weights = [lambda P, t=t, c=c: np.abs(t(P)) * np.abs(w.f(c.map(P)))
                           for t, c in zip(T.thetas, T.atlas.charts)]
                bound = weighted_volume(T.atlas, generic_sigma(T.sigma), None, quad, weights, False, seed)
                rhs = L ** T.dim * bound.value
                ratio = abs(val) / rhs if rhs > 0 else 0.0
                worst_ratio = max(worst_ratio, ratio)
                if abs(val) > rhs * (1 + 1e-9) + err + L ** T.dim * bound.error + 1e-12:
                    bound_viol += 1
                # locality: a constant coordinate kills the form
                pc = _freeze_coordinate(w.pi, int(rng.integers(T.dim)), float(rng.normal()))
                v0 = cur.evaluate(T, cur.TestForm(w.f, pc), quad)
                max_local = max(max_local, abs(v0))
                local_viol += abs(v0) > 1e-10
            strict = _strict_locality(T, quad)
            cont = _continuity_family(T, quad)
            good = bound_viol == 0 and local_viol == 0 and strict <= 1e-10 and cont["converges"]
            ok &= good
            rows.append({"current": name, "bound_violations": bound_viol, "max_ratio": worst_ratio,
                         "locality_violations": local_viol, "max_constant_coordinate_value": max_local,
                         "strict_locality_value": strict, "continuity": cont, "pass": bool(good)})
        return ok, {"currents": rows}

    return _timed(9, "Locality and finite-mass bound", 60, "0 violations over 100 forms per current", body)


def _sample_targets(T, quad):
    from .quadrature import midpoint_grid

    out = []
    for c in T.atlas.charts:
        for N in (quad, quad // 2):
            P, _ = midpoint_grid(c.box, N)
            out.append(c.map(P))
    return np.vstack(out)


def _freeze_coordinate(pi: LipschitzMap, i: int, value: float) -> LipschitzMap:
    func = pi.func

    def g(X):
        Y = np.array(func(X), dtype=float)
        Y[:, i] = value
        return Y

    return LipschitzMap(pi.domain_dim, pi.target_dim, g, pi.target_norm)


def _strict_locality(T, quad) -> float:
    """``pi^(1) = max(0, x_0 - c)`` vanishes near spt f, which sits left of ``c``."""
    X = _sample_targets(T, quad)
    lo, hi = np.quantile(X[:, 0], [0.2, 0.8])
    c = 0.5 * (lo + hi)
    support_edge = c - 0.25 * (hi - lo)
    f = lambda Y: np.maximum(0.0, support_edge - np.atleast_2d(Y)[:, 0])  # noqa: E731
    m, n = T.target_dim, T.dim

    def pi(Y):
        out = np.zeros((len(Y), n))
        out[:, 0] = np.maximum(0.0, Y[:, 0] - c)
        out[:, 1:] = Y[:, 1:n] if m >= n else 0.0
        return out

    return abs(cur.evaluate(T, cur.TestForm(f, LipschitzMap(m, n, pi, T.sigma), None, False), quad))


def _continuity_family(T, quad) -> dict:
    """Truncations ``psi_m`` of ``psi`` (zero on ``|psi| <= 1/m``) converge in evaluation."""
    m_dim, n = T.target_dim, T.dim
    X = _sample_targets(T, quad)
    c = float(np.median(X[:, 0]))
    psi = lambda Y: Y[:, 0] - c  # noqa: E731
    f = lambda Y: np.ones(len(np.atleast_2d(Y)))  # noqa: E731

    def make(trunc):
        def pi(Y):
            out = np.zeros((len(Y), n))
            p = psi(Y)
            if trunc:
                p = np.sign(p) * np.maximum(0.0, np.abs(p) - 1.0 / trunc)
            out[:, 0] = p
            out[:, 1:] = Y[:, 1:n]
            return out

        return LipschitzMap(m_dim, n, pi, T.sigma)

    limit = cur.evaluate(T, cur.TestForm(f, make(None), None, True), quad)
    values = [cur.evaluate(T, cur.TestForm(f, make(k), None, False), quad) for k in (2, 8, 32, 128)]
    errs = [abs(v - limit) for v in values]
    scale = max(abs(limit), 1e-12)
    return {"limit": limit, "errors": errs, "converges": errs[-1] <= max(errs[0], 1e-12) and errs[-1] / scale < 0.05}


# --------------------------------------------------------------------------


CRITERIA = {
    1: criterion_golden,
    2: criterion_normalization,
    3: criterion_axioms,
    4: criterion_duality,
    5: criterion_comparisons,
    6: criterion_chart_independence,
    7: criterion_area_formula,
    8: criterion_convexity,
    9: criterion_locality,
}


def run_all(seed: int = 0, only=None, log=None) -> list:
    results = []
    for k, fn in CRITERIA.items():
        if only and k not in only:
            continue
        r = fn(seed)
        if log:
            log(r.line())
        results.append(r)
    return results

