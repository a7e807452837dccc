"""Command line interface.

Subcommands: ``limit`` (theoretical constants), ``simulate`` (thresholds of
one sampled or loaded cloud), ``converge`` (seeded experiment sweep to CSV),
``faces`` (face-lattice dump), ``report`` (figures from a finished CSV).
Exit codes: 0 success, 2 usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import ConfigurationError
from .experiment import CSV_COLUMNS, ExperimentConfig, KRule, format_row, \
    run_convergence_experiment
from .geometry import build_polytope, angular_volume
from .limits import limit_constant, limit_constant_hypercube, \
    limit_constant_polygon, limit_constant_polyhedron
from .plots import render_report
from .rates import BetaMode
from .sampling import PointCloud, make_density, sample_points
from .thresholds import compute_thresholds

__all__ = ["main", "cli_main", "console_main", "build_parser"]

_SHAPES = ("box", "cross_polytope", "hypercube", "regular_polygon", "simplex")


def _polytope_spec_from_args(args) -> dict:
    if getattr(args, "polytope", None):
        with open(args.polytope) as fh:
            return json.load(fh)
    if not getattr(args, "shape", None):
        raise ConfigurationError("need --shape or --polytope FILE")
    spec = {"shape": args.shape}
    if args.shape == "box":
        if not args.sides:
            raise ConfigurationError("box needs --sides, e.g. --sides 1,2")
        spec["sides"] = [float(s) for s in str(args.sides).split(",")]
    elif args.shape == "regular_polygon":
        if not args.sides:
            raise ConfigurationError("regular_polygon needs --sides, e.g. --sides 6")
        spec["sides"] = int(args.sides)
    else:
        if args.dim is None:
            raise ConfigurationError(f"{args.shape} needs --dim")
        spec["dim"] = int(args.dim)
    return spec


def _density_spec(arg) -> dict:
    if arg is None or arg == "uniform":
        return {"kind": "uniform"}
    s = str(arg).strip()
    if s.startswith("{"):
        return json.loads(s)
    with open(s) as fh:
        return json.load(fh)


def _outputs(arg) -> tuple[str, ...]:
    chosen = tuple(ch for ch in str(arg).upper() if ch in ("L", "M"))
    if not chosen:
        raise ConfigurationError(f"outputs must name L and/or M, got {arg!r}")
    seen = []
    for ch in chosen:
        if ch not in seen:
            seen.append(ch)
    return tuple(seen)


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_limit(args) -> int:
    poly = build_polytope(_polytope_spec_from_args(args))
    dens = make_density(_density_spec(args.density), poly)
    beta = BetaMode.parse(args.beta)
    form = {
        "general": limit_constant,
        "polygon": limit_constant_polygon,
        "polyhedron": limit_constant_polyhedron,
        "hypercube": limit_constant_hypercube,
    }[args.form]
    report = form(poly, dens, beta)
    _emit(json.dumps(report.to_dict(), indent=2), args.output)
    return 0


def cmd_simulate(args) -> int:
    if args.points:
        try:
            pts = np.loadtxt(args.points, delimiter=",", ndmin=2)
        except ValueError:
            pts = np.loadtxt(args.points, ndmin=2)
        cloud = PointCloud.from_points(pts, polytope_id=f"file:{args.points}")
        source = cloud.polytope_id
    else:
        if args.n is None:
            raise ConfigurationError("simulate needs --n (or --points FILE)")
        poly = build_polytope(_polytope_spec_from_args(args))
        dens = make_density(_density_spec(args.density), poly)
        cloud = sample_points(poly, dens, args.n, args.seed)
        source = cloud.polytope_id
    report = compute_thresholds(cloud, args.k, want_m="M" in _outputs(args.outputs))
    payload = dict(report.to_dict(), seed=cloud.seed, source=source)
    _emit(json.dumps(payload, indent=2), args.output)
    return 0


def cmd_converge(args) -> int:
    if args.config:
        config = ExperimentConfig.from_json_file(args.config)
        if args.output:
            config.output_path = args.output
    else:
        rules = [r for r in (
            ("fixed", args.k), ("beta_log", args.beta_log), ("power", args.power))
            if r[1] is not None]
        if len(rules) != 1:
            raise ConfigurationError(
                "need exactly one of --k, --beta-log, --power (or --config FILE)")
        kind, value = rules[0]
        if kind == "fixed":
            k_rule = KRule("fixed", k=int(value))
        elif kind == "beta_log":
            k_rule = KRule("beta_log", beta=float(value))
        else:
            c, gamma = (float(s) for s in str(value).split(","))
            k_rule = KRule("power", c=c, gamma=gamma)
        if not args.n_values:
            raise ConfigurationError("converge needs --n-values, e.g. --n-values 1000,10000")
        config = ExperimentConfig(
            polytope=_polytope_spec_from_args(args),
            density=_density_spec(args.density),
            k_rule=k_rule,
            n_values=[int(s) for s in str(args.n_values).split(",")],
            trials=int(args.trials),
            master_seed=int(args.seed),
            outputs=_outputs(args.outputs),
            output_path=args.output,
        )
    rows = run_convergence_experiment(config)
    if config.output_path:
        print(f"wrote {len(rows)} rows to {config.output_path}")
        if args.plot:
            for p in render_report(config.output_path, normalization=args.normalization):
                print(f"wrote {p}")
    else:
        if args.plot:
            raise ConfigurationError("--plot needs --output FILE (figures render from the CSV)")
        print(",".join(CSV_COLUMNS))
        for row in rows:
            print(format_row(row))
    return 0


def cmd_faces(args) -> int:
    poly = build_polytope(_polytope_spec_from_args(args))
    lines = ["id,dimension,vertex_ids,angular_volume"]
    for face in poly.faces:
        rho = angular_volume(poly, face)
        vids = ";".join(str(v) for v in face.vertex_ids)
        lines.append(f"{face.id},{face.dimension},{vids},{format(rho, '.17g')}")
    _emit("\n".join(lines), args.output)
    return 0


def cmd_report(args) -> int:
    for p in render_report(args.csv, args.outdir, normalization=args.normalization):
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    shape = argparse.ArgumentParser(add_help=False)
    shape.add_argument("--shape", choices=_SHAPES, help="builtin generator")
    shape.add_argument("--dim", type=int, help="dimension for hypercube/simplex/cross_polytope")
    shape.add_argument("--sides", help="box side lengths 'a,b,...' or polygon vertex count")
    shape.add_argument("--polytope", metavar="FILE", help="JSON polytope spec file")

    density = argparse.ArgumentParser(add_help=False)
    density.add_argument("--density", default="uniform",
                         help="'uniform', inline JSON, or a JSON file (default uniform)")

    parser = argparse.ArgumentParser(
        prog="polylink",
        description="Thresholds and limit constants for geometric graphs on "
                    "random points in convex polytopes.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("limit", parents=[shape, density],
                       help="theoretical limit constant, per face")
    p.add_argument("--beta", default="0", help="k(n)/log n limit: a number or 'inf'")
    p.add_argument("--form", default="general",
                   choices=("general", "polygon", "polyhedron", "hypercube"),
                   help="general lattice formula or a specialized closed form")
    p.add_argument("--output", metavar="FILE", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("simulate", parents=[shape, density],
                       help="thresholds of one sampled or loaded cloud")
    p.add_argument("--n", type=int, help="points to sample")
    p.add_argument("--k", type=int, required=True, help="neighbour count k")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", metavar="FILE", help="CSV of points (one per row) instead of sampling")
    p.add_argument("--outputs", default="LM", help="which thresholds: L, M, or LM")
    p.add_argument("--output", metavar="FILE", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("converge", parents=[shape, density],
                       help="seeded convergence sweep, CSV rows")
    p.add_argument("--config", metavar="FILE", help="full experiment config (JSON)")
    p.add_argument("--k", type=int, help="fixed k rule")
    p.add_argument("--beta-log", type=float, help="k(n) = ceil(beta log n) rule")
    p.add_argument("--power", metavar="C,GAMMA", help="k(n) = ceil(c n^gamma) rule")
    p.add_argument("--n-values", help="comma list of sample sizes")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--outputs", default="LM")
    p.add_argument("--output", metavar="FILE", help="CSV path (default: stdout)")
    p.add_argument("--plot", action="store_true",
                   help="also render figures from the written CSV")
    p.add_argument("--normalization", default="log", choices=("log", "k"))
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("faces", parents=[shape],
                       help="face lattice dump: id, dimension, vertex ids, rho")
    p.add_argument("--output", metavar="FILE", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_faces)

    p = sub.add_parser("report", help="render figures from a convergence CSV")
    p.add_argument("--csv", required=True, metavar="FILE")
    p.add_argument("--outdir", metavar="DIR", help="default: alongside the CSV")
    p.add_argument("--normalization", default="log", choices=("log", "k"))
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


cli_main = main


def console_main() -> None:
    sys.exit(main())
