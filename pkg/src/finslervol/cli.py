"""``finslervol`` command-line front end.

Every subcommand reads JSON inputs, writes one JSON document (to stdout or
``--out``) and is deterministic for a fixed ``--seed``.

Exit codes: 0 success, 1 malformed input, 2 solver failure, 3 acceptance
failure (``repro`` only).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import acceptance, currents as cur, specs
from .density import ConvexityReport, check_semi_ellipticity, crafted_nonconvex_density, induced_density, wedge
from .ellipsoids import SolverError
from .finsler import finsler_volume
from .jacobians import (
    ALL_FIXED_KINDS,
    JacobianKind,
    Kind,
    check_axioms,
    generic_sigma,
    jacobian,
)
from .norms import DegenerateNormError, random_bijection, random_exact_norm, unit_ball_volume

EXIT_INPUT, EXIT_SOLVER, EXIT_ACCEPTANCE = 1, 2, 3
KIND_NAMES = [k.value for k in Kind]


# --------------------------------------------------------------------------
# input helpers


def _norm(path, dim):
    d = specs.load_json(path)
    if d.get("kind") == "lp" and "scales" not in d and "dim" not in d:
        if dim is None:
            raise specs.SpecError("lp norm without scales needs --dim")
        d = {**d, "dim": dim}
    return specs.with_dim(specs.norm_from_json(d), dim)


def _kind(name: str, sigma_path, dim) -> JacobianKind:
    if name == Kind.GENERIC_SIGMA.value:
        if not sigma_path:
            raise specs.SpecError("kind 'sigma' needs --sigma")
        return generic_sigma(_norm(sigma_path, dim))
    if sigma_path:
        raise specs.SpecError(f"--sigma only applies to kind 'sigma', not {name!r}")
    return JacobianKind.parse(name)


def _current(args):
    T = specs.current_from_json(specs.load_json(args.current))
    if getattr(args, "sigma", None):
        T = T.with_sigma(_norm(args.sigma, T.dim))
    return T


def _region(args):
    return specs.region_from_json(specs.load_json(args.region)) if getattr(args, "region", None) else None


# --------------------------------------------------------------------------
# commands


def cmd_jacobian(args):
    s = _norm(args.norm, args.dim)
    kind = _kind(args.kind, args.sigma, s.dim)
    res = jacobian(kind, s, seed=args.seed)
    return {"kind": kind.name, "n": s.dim, **res.to_json()}


def cmd_ball_volume(args):
    s = _norm(args.norm, args.dim)
    return {"n": s.dim, **unit_ball_volume(s).to_json()}


def cmd_finsler_volume(args):
    atlas = specs.atlas_from_json(specs.load_json(args.atlas))
    kind = _kind(args.kind, args.sigma, atlas.dim)
    est = finsler_volume(atlas, kind, _region(args), args.quad, seed=args.seed)
    return {"kind": kind.name, "quad": args.quad, **est.to_json()}


def cmd_mass(args):
    T = _current(args)
    A = _region(args)
    out = {"n": T.dim, "m": T.target_dim}
    if args.method in ("formula", "both"):
        out["formula"] = cur.mass_by_formula(T, A, args.quad, seed=args.seed).to_json()
    if args.method in ("duality", "both"):
        out["duality"] = {"value": cur.mass_by_duality(T, A, quad=args.quad, seed=args.seed)}
    return out


def cmd_compare_masses(args):
    T = _current(args)
    return cur.compare_masses(T, _region(args), args.quad, tol=args.tol).to_json()


def _vectors(text: str) -> np.ndarray:
    try:
        V = np.asarray(json.loads(text), dtype=float)
    except (ValueError, TypeError) as exc:
        raise specs.SpecError(f"--vectors must be a JSON matrix: {exc}") from exc
    if V.ndim != 2:
        raise specs.SpecError("--vectors must be a list of rows")
    return V


def cmd_density(args):
    ambient = _norm(args.norm, args.dim)
    kind = _kind(args.kind, args.sigma, None)
    V = _vectors(args.vectors)
    if V.shape[1] != ambient.dim or V.shape[0] >= V.shape[1]:
        raise specs.SpecError("vectors must be n rows of length m > n matching the ambient norm")
    phi = induced_density(kind, ambient, args.seed)
    return {"kind": kind.name, "value": phi(V), "wedge": wedge(V).tolist()}


def cmd_density_check(args):
    ambient = _norm(args.norm, args.dim)
    kind = _kind(args.kind, args.sigma, 2)
    phi = induced_density(kind, ambient, args.seed)
    if args.control:
        phi = crafted_nonconvex_density(phi)
    try:
        rep: ConvexityReport = check_semi_ellipticity(phi, ambient, trials=args.trials, decomp_size=args.pieces,
                                                      seed=args.seed, tol=args.tol,
                                                      envelope_samples=args.envelope)
    except ValueError as exc:
        raise specs.SpecError(str(exc)) from exc
    return {"kind": phi.name, "ambient_dim": ambient.dim, **rep.to_json()}


def cmd_axioms_check(args):
    names = [args.kind] if args.kind else [k.name for k in ALL_FIXED_KINDS]
    rng = np.random.default_rng(args.seed)
    samples = [(random_exact_norm(args.dim, rng), random_bijection(args.dim, rng)) for _ in range(args.samples)]
    reports = []
    for name in names:
        kind = _kind(name, args.sigma, args.dim)
        reports.append(check_axioms(kind, samples, seed=args.seed).to_json())
    return {"n": args.dim, "reports": reports}


def cmd_repro(args):
    only = set(args.only) if args.only else None
    log = (lambda line: print(line, file=sys.stderr)) if not args.quiet else None
    results = acceptance.run_all(args.seed, only, log)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["criterion", "title", "passed", "runtime_s", "budget_s", "tolerance"])
        for r in results:
            w.writerow([r.number, r.title, r.passed, f"{r.runtime:.3f}", r.budget, r.tolerance])
        with open(args.csv, "w", newline="") as fh:
            fh.write(buf.getvalue())
    out = {"seed": args.seed, "all_passed": all(r.passed for r in results),
           "criteria": [r.to_json() for r in results]}
    return out, (0 if out["all_passed"] else EXIT_ACCEPTANCE)


COMMANDS = {
    "jacobian": cmd_jacobian,
    "ball-volume": cmd_ball_volume,
    "finsler-volume": cmd_finsler_volume,
    "mass": cmd_mass,
    "compare-masses": cmd_compare_masses,
    "density": cmd_density,
    "density-check": cmd_density_check,
    "axioms-check": cmd_axioms_check,
    "repro": cmd_repro,
}


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finslervol", description="Finsler volumes and masses of L^sigma currents")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="write JSON here instead of stdout")
        return sp

    def kind_args(sp, default):
        sp.add_argument("--kind", choices=KIND_NAMES, default=default)
        sp.add_argument("--sigma", help="norm JSON for kind 'sigma'")

    sp = common(sub.add_parser("jacobian", help="J(s) for one Jacobian kind"))
    sp.add_argument("--norm", required=True)
    sp.add_argument("--dim", type=int)
    kind_args(sp, "mass-star")

    sp = common(sub.add_parser("ball-volume", help="Lebesgue volume of a unit ball"))
    sp.add_argument("--norm", required=True)
    sp.add_argument("--dim", type=int)

    sp = common(sub.add_parser("finsler-volume", help="volume of a chart-presented set"))
    sp.add_argument("--atlas", required=True)
    sp.add_argument("--region", help="region JSON in the target")
    sp.add_argument("--quad", type=int)
    kind_args(sp, "busemann")

    sp = common(sub.add_parser("mass", help="mass of a current"))
    sp.add_argument("--current", required=True)
    sp.add_argument("--sigma", help="override the current's sigma")
    sp.add_argument("--region", help="region JSON in the target")
    sp.add_argument("--quad", type=int)
    sp.add_argument("--method", choices=("formula", "duality", "both"), default="formula")

    sp = common(sub.add_parser("compare-masses", help="mass comparison bounds"))
    sp.add_argument("--current", required=True)
    sp.add_argument("--sigma", help="override the current's sigma")
    sp.add_argument("--region", help="region JSON in the target")
    sp.add_argument("--quad", type=int)
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = common(sub.add_parser("density", help="induced density of a simple n-vector"))
    sp.add_argument("--norm", required=True, help="ambient norm JSON")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--vectors", required=True, help='spanning rows as JSON, e.g. "[[1,0,0],[0,1,0]]"')
    kind_args(sp, "circumscribed-riemannian")

    sp = common(sub.add_parser("density-check", help="sampled convexity test of an induced density"))
    sp.add_argument("--norm", required=True, help="ambient norm JSON (R^3 or R^4)")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--pieces", type=int, default=3)
    sp.add_argument("--envelope", type=int, default=400, help="level-set samples for hull decompositions")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--control", action="store_true", help="test the crafted non-convex control instead")
    kind_args(sp, "circumscribed-riemannian")

    sp = common(sub.add_parser("axioms-check", help="monotonicity and transformation law on random samples"))
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--samples", type=int, default=50)
    kind_args(sp, None)

    sp = common(sub.add_parser("repro", help="run the acceptance suite"))
    sp.add_argument("--only", type=int, nargs="*", choices=sorted(acceptance.CRITERIA))
    sp.add_argument("--csv", help="also write the pass/fail table as CSV")
    sp.add_argument("--quiet", action="store_true")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except (specs.SpecError, DegenerateNormError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:  # domain checks in the library (dimensions, chart data)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    code = 0
    if isinstance(result, tuple):
        result, code = result
    text = specs.dump(result, args.out)
    if not args.out:
        print(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
