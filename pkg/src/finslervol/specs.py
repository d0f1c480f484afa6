"""JSON descriptions of norms, maps, regions, atlases, currents and forms."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import sympy

from .currents import DeskCurrent, TestForm, constant, expression, piecewise
from .finsler import Atlas, Chart
from .metric_diff import LipschitzMap, affine_map, identity_map, polynomial_map
from .norms import Ellipsoidal, LpNorm, PolytopeFacets, PolytopeVertices, Pullback, SemiNorm, euclidean
from .quadrature import Ball, Box, BoxRegion, Complement, Everything, Intersection, Region, Union


class SpecError(ValueError):
    """Malformed JSON input."""


def _matrix(obj, name: str) -> np.ndarray:
    try:
        M = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{name} must be a numeric matrix") from exc
    if not np.all(np.isfinite(M)):
        raise SpecError(f"{name} has non-finite entries")
    return M


def _need(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise SpecError(f"{where}: missing field {key!r}")
    return d[key]


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc


# --------------------------------------------------------------------------
# norms


def norm_from_json(d: dict) -> SemiNorm:
    kind = _need(d, "kind", "norm")
    try:
        if kind == "ellipsoid":
            return Ellipsoidal(_matrix(_need(d, "Q", "ellipsoid"), "Q"))
        if kind == "polytope_vertices":
            return PolytopeVertices(_matrix(_need(d, "V", "polytope_vertices"), "V"))
        if kind == "polytope_facets":
            return PolytopeFacets(_matrix(_need(d, "H", "polytope_facets"), "H"))
        if kind == "lp":
            p = _need(d, "p", "lp")
            p = math.inf if p in ("inf", "Infinity", math.inf) else float(p)
            if "scales" in d:
                scales = _matrix(d["scales"], "scales")
            else:
                scales = np.ones(int(_need(d, "dim", "lp")))
            return LpNorm(p, scales)
        if kind == "pullback":
            return Pullback(norm_from_json(_need(d, "base", "pullback")), _matrix(_need(d, "L", "pullback"), "L"))
    except SpecError:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecError(f"invalid {kind} norm: {exc}") from exc
    raise SpecError(f"unknown norm kind {kind!r}")


def norm_to_json(s: SemiNorm) -> dict:
    if isinstance(s, Ellipsoidal):
        return {"kind": "ellipsoid", "Q": s.Q.tolist()}
    if isinstance(s, PolytopeVertices):
        return {"kind": "polytope_vertices", "V": s.V.tolist()}
    if isinstance(s, PolytopeFacets):
        return {"kind": "polytope_facets", "H": s.H.tolist()}
    if isinstance(s, LpNorm):
        return {"kind": "lp", "p": "inf" if math.isinf(s.p) else s.p, "scales": s.scales.tolist()}
    if isinstance(s, Pullback):
        return {"kind": "pullback", "base": norm_to_json(s.base), "L": s.L.tolist()}
    raise SpecError(f"cannot serialize {type(s).__name__}")


def with_dim(s: SemiNorm, dim: int | None) -> SemiNorm:
    if dim is not None and s.dim != dim:
        raise SpecError(f"norm has dimension {s.dim}, expected {dim}")
    return s


# --------------------------------------------------------------------------
# maps


def _expr_map(exprs, domain_dim: int, target_norm) -> LipschitzMap:
    names = [f"x{i}" for i in range(domain_dim)]
    syms = sympy.symbols(names)
    local = dict(zip(names, syms))
    if domain_dim <= 3:
        local.update({a: local[n] for a, n in zip("xyz", names)})
    try:
        parsed = [sympy.sympify(e, locals=local) for e in exprs]
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise SpecError(f"cannot parse map expression: {exc}") from exc
    for e in parsed:
        if not e.free_symbols <= set(syms):
            raise SpecError(f"unknown symbols in map expression {e}")
    fns = [sympy.lambdify(syms, e, "numpy") for e in parsed]

    def func(P):
        return np.column_stack([np.broadcast_to(np.asarray(fn(*P.T), dtype=float), (len(P),)) for fn in fns])

    return LipschitzMap(domain_dim, len(exprs), func, target_norm, spec={"kind": "expr", "exprs": list(exprs)})


def map_from_json(d: dict, domain_dim: int | None, target_norm: SemiNorm | None) -> LipschitzMap:
    kind = _need(d, "kind", "map")
    lip = d.get("lip")
    if target_norm is None:
        raise SpecError("map needs a target norm")
    if kind == "identity":
        n = int(d.get("dim", domain_dim or 0))
        if n <= 0:
            raise SpecError("identity map needs a dimension")
        f = identity_map(n, target_norm)
    elif kind == "linear":
        A = _matrix(_need(d, "A", "linear map"), "A")
        b = _matrix(d["b"], "b") if "b" in d else None
        f = affine_map(A, b, target_norm)
    elif kind == "poly":
        if domain_dim is None:
            raise SpecError("polynomial map needs a domain dimension")
        f = polynomial_map(_need(d, "terms", "poly"), domain_dim, target_norm)
    elif kind == "expr":
        if domain_dim is None:
            raise SpecError("expression map needs a domain dimension")
        f = _expr_map(_need(d, "exprs", "expr"), domain_dim, target_norm)
    else:
        raise SpecError(f"unknown map kind {kind!r}")
    if f.target_norm is not None and f.target_norm.dim != f.target_dim:
        raise SpecError("target norm dimension does not match the map")
    if lip is not None:
        f = LipschitzMap(f.domain_dim, f.target_dim, f.func, f.target_norm, float(lip), f.matrix, f.offset,
                         f.metric, f.spec)
    return f


# --------------------------------------------------------------------------
# regions


def box_from_json(obj) -> Box:
    if isinstance(obj, dict):
        lo, hi = _need(obj, "lo", "box"), _need(obj, "hi", "box")
    else:
        try:
            lo, hi = obj
        except (TypeError, ValueError) as exc:
            raise SpecError("box must be [lo, hi]") from exc
    try:
        return Box(_matrix(lo, "box lo"), _matrix(hi, "box hi"))
    except ValueError as exc:
        raise SpecError(str(exc)) from exc


def region_from_json(d) -> Region | None:
    if d is None:
        return None
    if isinstance(d, list):  # bare list of boxes
        return BoxRegion(tuple(box_from_json(b) for b in d))
    kind = _need(d, "kind", "region")
    if kind in ("all", "everything"):
        return Everything()
    if kind == "boxes":
        return BoxRegion(tuple(box_from_json(b) for b in _need(d, "boxes", "region")))
    if kind == "ball":
        return Ball(_matrix(_need(d, "center", "ball"), "center"), float(_need(d, "radius", "ball")))
    if kind == "complement":
        return Complement(region_from_json(_need(d, "region", "complement")))
    if kind in ("intersection", "union"):
        parts = tuple(region_from_json(r) for r in _need(d, "regions", kind))
        return Intersection(parts) if kind == "intersection" else Union(parts)
    raise SpecError(f"unknown region kind {kind!r}")


# --------------------------------------------------------------------------
# atlases, currents, forms


def chart_from_json(d: dict, default_norm: SemiNorm | None = None) -> Chart:
    box = box_from_json(_need(d, "box", "chart"))
    norm = norm_from_json(d["target_norm"]) if "target_norm" in d else default_norm
    f = map_from_json(_need(d, "map", "chart"), box.dim, norm)
    bilip = tuple(float(x) for x in d.get("bilip", (1.0, 1.0)))
    try:
        return Chart(box, f, region_from_json(d.get("indicator")), bilip)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc


def atlas_from_json(d: dict) -> Atlas:
    default = norm_from_json(d["target_norm"]) if "target_norm" in d else None
    charts = _need(d, "charts", "atlas")
    if not isinstance(charts, list) or not charts:
        raise SpecError("atlas needs a nonempty chart list")
    try:
        return Atlas(tuple(chart_from_json(c, default) for c in charts))
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(str(exc)) from exc


def multiplicity_from_json(obj, dim: int):
    if isinstance(obj, (int, float)):
        return constant(obj)
    if isinstance(obj, str):
        try:
            return expression(obj, dim)
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
    if isinstance(obj, dict) and "pieces" in obj:
        return piecewise([(box_from_json(b), float(v)) for b, v in obj["pieces"]], float(obj.get("default", 0.0)))
    raise SpecError(f"cannot read multiplicity {obj!r}")


def current_from_json(d: dict) -> DeskCurrent:
    atlas = atlas_from_json(_need(d, "atlas", "current"))
    thetas = d.get("theta", [1.0] * len(atlas.charts))
    if not isinstance(thetas, list):
        thetas = [thetas] * len(atlas.charts)
    sigma = norm_from_json(d["sigma"]) if "sigma" in d else euclidean(atlas.dim)
    try:
        return DeskCurrent(atlas, tuple(multiplicity_from_json(t, atlas.dim) for t in thetas), sigma)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc


def form_from_json(d: dict, T: DeskCurrent) -> TestForm:
    f_obj = d.get("f", 1.0)
    m = T.target_dim
    if isinstance(f_obj, (int, float)):
        val = float(f_obj)
        f = lambda X: np.full(len(np.atleast_2d(X)), val)  # noqa: E731
        smooth = True
    else:
        theta = multiplicity_from_json(f_obj, m)
        f, smooth = theta, theta.smooth
    pi = map_from_json(_need(d, "pi", "form"), m, T.sigma)
    return TestForm(f, pi, None, smooth)


def dump(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_default)
    if path:
        Path(path).write_text(text + "\n")
    return text


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
