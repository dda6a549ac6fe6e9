"""Command line front end.

Exit codes: 0 success, 1 invalid input, 2 empty polyhedron, 3 complexity
budget exceeded, 4 infeasible program, 5 numerical failure, 6 plotting in a
dimension other than 2, 7 invariance check failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .conic import ClarabelBackend
from .errors import (ComplexityBudgetExceeded, EmptyPolyhedron, Infeasible, InvkitError,
                     NumericalFailure)
from .partition import build_partition, orthant_partition, single_piece
from .polyhedra import FM_ROW_BUDGET, HPolyhedron
from .pwse import PiecewiseSemiEllipsoid, from_polytope
from .systems import LinearControlSystem, check_control_invariance, system_from_dict, viability_kernel
from .synth import SynthesisProblem, partition_from_iterate, solve

SCHEMA = "invkit/1"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_EMPTY = 2
EXIT_BUDGET = 3
EXIT_INFEASIBLE = 4
EXIT_NUMERICAL = 5
EXIT_DIMENSION = 6
EXIT_CHECK_FAILED = 7


class PlotDimensionError(InvkitError):
    pass


# -- input parsing ------------------------------------------------------------


def load_json(path: str) -> dict:
    if path == "-":
        return json.load(sys.stdin)
    with open(path) as fh:
        return json.load(fh)


def load_system(doc: dict):
    return system_from_dict(doc.get("system", doc))


def partition_from_source(source, system):
    """Partition described by a problem file.

    Accepted forms: ``"quadrants"`` (orthants), ``"single"``,
    ``"facet-cones-of-viability-iterate k"``, ``{"iterate": k}`` and
    ``{"cones": [H-rep, ...]}``.
    """
    n = system.n
    if source is None or source == "quadrants":
        return orthant_partition(n)
    if source == "single":
        return single_piece(n)
    if isinstance(source, str) and source.startswith("facet-cones-of-viability-iterate"):
        return partition_from_iterate(system, int(source.rsplit(" ", 1)[-1]))
    if isinstance(source, dict) and "iterate" in source:
        return partition_from_iterate(system, int(source["iterate"]))
    if isinstance(source, dict) and "cones" in source:
        return build_partition([HPolyhedron.from_dict(c, n=n) for c in source["cones"]])
    if isinstance(source, list):
        return build_partition([HPolyhedron.from_dict(c, n=n) for c in source])
    raise ValueError(f"unknown partition source {source!r}")


def load_pwse(doc: dict) -> PiecewiseSemiEllipsoid:
    if doc.get("kind") == "synthesis":
        doc = doc["set"]
    return PiecewiseSemiEllipsoid.from_dict(doc)


def emit(doc: dict, out: str | None):
    text = json.dumps(doc, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _hrep(P: HPolyhedron) -> dict:
    return {"A": P.A.tolist(), "b": P.b.tolist()}


# -- commands -----------------------------------------------------------------


def cmd_viability(args) -> int:
    system = load_system(load_json(args.file))
    if not isinstance(system, LinearControlSystem):
        raise ValueError("the viability iteration needs a single-mode system")
    res = viability_kernel(system, max_iter=args.max_iter, tol=args.tol, budget=args.budget)
    emit({
        "schema": SCHEMA,
        "kind": "viability",
        "converged": res.converged,
        "iterates": [dict(_hrep(P), facets=P.nrows) for P in res.iterates],
        "kernel": _hrep(res.kernel),
    }, args.out)
    return EXIT_OK


def cmd_synthesize(args) -> int:
    doc = load_json(args.file)
    system = load_system(doc)
    part = partition_from_source(doc.get("partition"), system)
    poly = doc.get("objective_polytope")
    opts = doc.get("solver", {})
    prob = SynthesisProblem(system, part,
                            HPolyhedron.from_dict(poly) if poly else None,
                            ball_fraction=args.ball_fraction if args.ball_fraction is not None
                            else opts.get("ball_fraction", 1e-2))
    backend = ClarabelBackend(tol=args.solver_tol if args.solver_tol is not None else opts.get("tol", 1e-10))
    res = solve(prob, backend, n_check=args.samples)
    out = {
        "schema": SCHEMA,
        "kind": "synthesis",
        "status": res.status,
        "objective": res.objective,
        "X": _hrep(system.X),
        "polar_side": res.polar_side.to_dict(),
        "set": res.S.to_dict(),
        "report": res.report.to_dict(),
    }
    if isinstance(system, LinearControlSystem):
        try:
            out["kernel"] = _hrep(viability_kernel(system, max_iter=args.max_iter).kernel)
        except InvkitError as exc:
            print(f"kernel not computed: {exc}", file=sys.stderr)
    emit(out, args.out)
    if not res.report.passed:
        print(f"verification failed: {res.report.to_dict()}", file=sys.stderr)
    return EXIT_OK


def cmd_polar(args) -> int:
    S = load_pwse(load_json(args.file))
    emit(S.polar().to_dict(), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    system = load_system(load_json(args.file))
    S = load_pwse(load_json(args.set))
    rep = check_control_invariance(system, S, n_samples=args.samples, tol=args.tol)
    emit(dict(rep.to_dict(), schema=SCHEMA, kind="check"), args.out)
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


def boundary_curve(S: PiecewiseSemiEllipsoid, samples: int) -> np.ndarray:
    """``samples`` boundary points ``d(t) / gauge(d(t))`` at angles ``2 pi k / samples``."""
    if S.n != 2:
        raise PlotDimensionError("plots need a two-dimensional set")
    t = 2 * np.pi * np.arange(samples) / samples
    D = np.column_stack([np.cos(t), np.sin(t)])
    return S.boundary_points(D)


def plot_curves(doc: dict, samples: int) -> list:
    kind = doc.get("kind")
    sets = []
    if kind == "synthesis":
        sets.append(("safe set", from_polytope(HPolyhedron.from_dict(doc["X"]))))
        if "kernel" in doc:
            sets.append(("kernel", from_polytope(HPolyhedron.from_dict(doc["kernel"]))))
        sets.append(("invariant set", PiecewiseSemiEllipsoid.from_dict(doc["set"])))
    elif kind == "viability":
        for k, it in enumerate(doc["iterates"]):
            sets.append((f"iterate {k}", from_polytope(HPolyhedron.from_dict(it))))
    else:
        sets.append(("set", PiecewiseSemiEllipsoid.from_dict(doc)))
    return [{"name": name, "points": boundary_curve(S, samples).tolist()} for name, S in sets]


_STYLES = [
    'fill="none" stroke="#444444" stroke-width="1.5" stroke-dasharray="6,4"',
    'fill="none" stroke="#1f77b4" stroke-width="1.5"',
    'fill="#ff7f0e" fill-opacity="0.25" stroke="#d62728" stroke-width="2"',
]


def render_svg(curves: list, size: int = 480) -> str:
    pts = np.vstack([np.asarray(c["points"]) for c in curves])
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    r = float(np.max(np.abs(pts))) * 1.1 if pts.size else 1.0
    scale = size / (2 * r)

    def xy(p):
        return f"{(p[0] + r) * scale:.3f},{(r - p[1]) * scale:.3f}"

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<line x1="0" y1="{size / 2}" x2="{size}" y2="{size / 2}" stroke="#cccccc"/>',
        f'<line x1="{size / 2}" y1="0" x2="{size / 2}" y2="{size}" stroke="#cccccc"/>',
    ]
    for k, c in enumerate(curves):
        P = [p for p in c["points"] if all(math.isfinite(v) for v in p)]
        style = _STYLES[k % len(_STYLES)] if len(curves) > 1 else _STYLES[2]
        lines.append(f'<polygon points="{" ".join(xy(p) for p in P)}" {style}><title>{c["name"]}</title></polygon>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_plot(args) -> int:
    curves = plot_curves(load_json(args.file), args.samples)
    if args.format == "json":
        emit({"schema": SCHEMA, "kind": "plot", "curves": curves}, args.out)
        return EXIT_OK
    text = render_svg(curves)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invkit", description="Control invariant sets with piecewise semi-ellipsoids.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("viability", help="polyhedral viability kernel iteration")
    v.add_argument("file")
    v.add_argument("--max-iter", type=int, default=50)
    v.add_argument("--tol", type=float, default=1e-8)
    v.add_argument("--budget", type=int, default=FM_ROW_BUDGET, help="row cap of each elimination step")
    v.add_argument("--out")
    v.set_defaults(func=cmd_viability)

    s = sub.add_parser("synthesize", help="solve the synthesis program and verify the result")
    s.add_argument("file")
    s.add_argument("--out")
    s.add_argument("--samples", type=int, default=1000, help="samples of the invariance checks")
    s.add_argument("--max-iter", type=int, default=50, help="viability iterations for the reported kernel")
    s.add_argument("--solver-tol", type=float, default=None)
    s.add_argument("--ball-fraction", type=float, default=None)
    s.set_defaults(func=cmd_synthesize)

    q = sub.add_parser("polar", help="polar of a piecewise semi-ellipsoid")
    q.add_argument("file")
    q.add_argument("--out")
    q.set_defaults(func=cmd_polar)

    c = sub.add_parser("check", help="check control invariance of a set")
    c.add_argument("file", help="problem or system file")
    c.add_argument("--set", required=True, help="set JSON (or a synthesis result)")
    c.add_argument("--samples", type=int, default=1000)
    c.add_argument("--tol", type=float, default=1e-6)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("plot", help="boundary curves of planar sets")
    g.add_argument("file")
    g.add_argument("--format", choices=["svg", "json"], default="svg")
    g.add_argument("--samples", type=int, default=360)
    g.add_argument("--out")
    g.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EmptyPolyhedron as exc:
        print(f"error: empty polyhedron: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except ComplexityBudgetExceeded as exc:
        print(f"error: complexity budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except Infeasible as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalFailure as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PlotDimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (InvkitError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
