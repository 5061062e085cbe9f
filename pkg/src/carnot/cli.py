"""Command-line interface to the geometry, transport and verification routines."""

import argparse
import csv
import json
import math
from pathlib import Path
import re
import sys

import numpy as np

from . import io
from .distance import CutLocusError, relative_log
from .distortion import tau
from .expmap import GeodesicPath
from .group import LayoutError, make_spec
from .transport import example36_instance, interpolate, solve_ot
from . import verify as V

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_LAYOUT = 3
EXIT_FORMAT = 4
EXIT_DOMAIN = 5

DEFAULT_SEED = 42
_INLINE_SPEC = re.compile(r"^\s*(\d+)\s*:\s*([0-9eE.+\-,\s]+)$")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- argument parsing


def load_spec(text):
    """A spec file path, or the inline form ``M:A1,A2,...`` (for example ``0:4``)."""
    path = Path(text)
    if path.is_file():
        return io.read_spec(path)
    match = _INLINE_SPEC.match(text)
    if match:
        return make_spec(int(match.group(1)), [float(a) for a in match.group(2).split(",") if a.strip()])
    raise CliError(f"spec file not found: {text}", EXIT_FORMAT)


def parse_fields(spec, text, what="covector"):
    """Parse ``kernel;block1;...;blockd;z`` (the kernel field only when m > 0); ``e`` is the identity."""
    if text.strip() == "e":
        return spec.identity()
    fields = [f.strip() for f in text.split(";")]
    expected = spec.d + 1 + (1 if spec.m else 0)
    if len(fields) != expected:
        raise LayoutError(f"{what} {text!r} has {len(fields)} fields, spec {spec.to_dict()} needs {expected}")
    try:
        parts = [[float(v) for v in f.split(",")] for f in fields]
    except ValueError:
        raise CliError(f"malformed number in {what} {text!r}", EXIT_FORMAT) from None
    x0 = parts[0] if spec.m else []
    blocks = parts[1 if spec.m else 0 : -1]
    z = parts[-1]
    if len(z) != 1 or any(len(b) != 2 for b in blocks):
        raise LayoutError(f"{what} {text!r}: blocks need two entries and the last field one entry")
    return spec.pack(x0, np.array(blocks, dtype=float).reshape(-1, 2), z[0])


def parse_floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise CliError(f"malformed number list {text!r}", EXIT_FORMAT) from None


def open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def _close(fh):
    if fh is not sys.stdout:
        fh.close()


def _fmt(v):
    return repr(float(v))


# ---------------------------------------------------------------- geometry commands


def cmd_geodesic(args):
    spec = load_spec(args.spec)
    p = parse_fields(spec, args.p)
    base = parse_fields(spec, args.base, "point")
    if args.samples < 2:
        raise CliError("--samples must be at least 2", EXIT_DOMAIN)
    path = GeodesicPath(spec, base, p)
    pts = path.sample(args.samples)
    fh = open_out(args.out)
    writer = csv.writer(fh)
    writer.writerow(["s"] + io.coordinate_names(spec))
    for s, row in zip(np.linspace(0.0, 1.0, args.samples), pts):
        writer.writerow([_fmt(s)] + [_fmt(v) for v in row])
    _close(fh)
    return EXIT_OK


def cmd_distance(args):
    spec = load_spec(args.spec)
    x = parse_fields(spec, getattr(args, "from"), "point")
    y = parse_fields(spec, args.to, "point")
    res = relative_log(spec, x[None, :], y[None, :])[0]
    if args.format == "json":
        print(json.dumps({"distance": res.dist, "class": res.cls.label}))
    else:
        print(f"{res.dist:.7f} {res.cls.label}")
    return EXIT_OK


def cmd_logmap(args):
    spec = load_spec(args.spec)
    x = parse_fields(spec, getattr(args, "from"), "point")
    y = parse_fields(spec, args.to, "point")
    res = relative_log(spec, x[None, :], y[None, :])[0]
    print(json.dumps({"covector": res.param.tolist(), "class": res.cls.label, "distance": res.dist}))
    return EXIT_OK


def cmd_tau(args):
    spec = load_spec(args.spec)
    if args.curve:
        norms = parse_floats(args.block_norms) if args.block_norms else [1.0] * spec.d
        if len(norms) != spec.d:
            raise LayoutError(f"--block-norms needs {spec.d} entries")
        if args.points < 2:
            raise CliError("--points must be at least 2", EXIT_DOMAIN)
        pz = np.linspace(-spec.pz_max, spec.pz_max, args.points)
        p = np.zeros((args.points, spec.dim))
        for i, r in enumerate(norms):
            p[:, spec.m + 2 * i] = r
        p[:, -1] = pz
        vals = tau(spec, args.s, p)
        fh = open_out(args.out)
        writer = csv.writer(fh)
        writer.writerow(["p_z", "tau"])
        for a, b in zip(pz, vals):
            writer.writerow([_fmt(a), _fmt(b)])
        _close(fh)
        return EXIT_OK
    if args.p is None:
        raise CliError("tau needs --p or --curve", EXIT_USAGE)
    print(_fmt(tau(spec, args.s, parse_fields(spec, args.p))))
    return EXIT_OK


# ---------------------------------------------------------------- transport commands


def cmd_ot(args):
    spec = load_spec(args.spec)
    mu0 = io.read_measure(spec, args.mu0)
    mu1 = io.read_measure(spec, args.mu1)
    plan = solve_ot(spec, mu0, mu1)
    io.write_plan(spec, args.out, plan)
    print(f"cost {plan.cost!r} pairs {len(plan)} solver {plan.solver}")
    return EXIT_OK


def cmd_interpolate(args):
    spec = load_spec(args.spec)
    mu0 = io.read_measure(spec, args.mu0)
    mu1 = io.read_measure(spec, args.mu1)
    if args.plan:
        plan_spec, plan = io.read_plan(args.plan)
        if plan_spec != spec:
            raise LayoutError("plan was computed for a different spec")
    else:
        plan = solve_ot(spec, mu0, mu1)
    mus = interpolate(spec, plan, mu0, mu1, args.s)
    io.write_measure(spec, args.out, mus)
    return EXIT_OK


def cmd_example36(args):
    a = parse_floats(args.a)
    b = parse_floats(args.b)
    ex = example36_instance(args.m, args.d, a, b, args.n, args.seed)
    spec = ex.spec
    plan = solve_ot(spec, ex.mu0, ex.mu1)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    x = ex.mu0.points
    io.write_spec(spec, out / "spec.json")
    io.write_points(spec, out / "S0.csv", x[ex.minus])
    io.write_points(spec, out / "S1.csv", x[~ex.minus])
    io.write_points(spec, out / "S0_tilde.csv", ex.image[ex.minus])
    io.write_points(spec, out / "S1_tilde.csv", ex.image[~ex.minus])
    io.write_plan(spec, out / "plan.json", plan)
    mus = interpolate(spec, plan, ex.mu0, ex.mu1, args.s)
    io.write_measure(spec, out / f"interpolant_s{args.s}.csv", mus)
    counts = {c: int(v) for c, v in zip(("abnormal", "normal"), (ex.minus.sum(), (~ex.minus).sum()))}
    print(json.dumps({"cost": plan.cost, "pairs": counts, "out_dir": str(out)}))
    return EXIT_OK


# ---------------------------------------------------------------- verification


def _run_check(args, name):
    seed = args.seed
    if name == "jdi36":
        return [
            V.verify_jdi_example36(
                args.m, args.d, parse_floats(args.a), parse_floats(args.b), args.n or 400, args.s or 0.5, seed
            )
        ]
    spec = load_spec(args.spec)
    if name == "calculus":
        return [V.verify_calculus(spec, args.n or 10_000, seed)]
    if name == "hessian":
        return [V.verify_hessian_psd(spec, args.n or 50, seed)]
    if name == "mcp":
        s_list = tuple(parse_floats(args.s_list)) if args.s_list else (0.25, 0.5, 0.75)
        return [V.verify_mcp(spec, None, None, s_list, args.n or 100_000, args.voxel_h or 0.02, seed)]
    if name == "bm":
        return [V.verify_bm(spec, None, None, args.s or 0.5, args.n or 200_000, args.voxel_h or 0.02, seed)]
    if name == "entropy":
        return [V.verify_entropy(spec, None, None, args.s or 0.5, None, args.n or 4000, args.voxel_h or 0.05, seed)]
    if name == "bbl":
        exps = parse_floats(args.p_exponent) if args.p_exponent else [0.0, 1.0, math.inf]
        grid = V.BBLGrid(V.default_unit_box(spec), V.default_unit_box(spec, 3.0), cells=args.cells)
        s = args.s or 0.5
        geo = V.BBLGeometry(spec, grid, s, 1.0 / grid.cells)
        return [V.verify_bbl(spec, s, p, grid, seed, geometry=geo) for p in exps]
    if name == "all":
        return V.verify_all(spec, seed, quick=args.quick)
    raise CliError(f"unknown check {name!r}", EXIT_USAGE)


def cmd_verify(args):
    reports = _run_check(args, args.check)
    for r in reports:
        print(r.summary(), file=sys.stderr)
    docs = [V._plain(r.to_dict(include_runtime=False)) for r in reports]
    text = json.dumps(docs[0] if len(docs) == 1 else docs, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


# ---------------------------------------------------------------- entry points


def build_parser():
    parser = argparse.ArgumentParser(prog="carnot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def with_spec(p):
        p.add_argument("--spec", required=True, help="spec JSON file or inline M:A1,A2,...")
        return p

    p = with_spec(sub.add_parser("geodesic", help="sample a geodesic as CSV"))
    p.add_argument("--p", required=True, help='covector, e.g. "1,0;0.785"')
    p.add_argument("--base", default="e", help="base point (default identity)")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--out")
    p.set_defaults(func=cmd_geodesic)

    for name, func in (("distance", cmd_distance), ("logmap", cmd_logmap)):
        p = with_spec(sub.add_parser(name))
        p.add_argument("--from", default="e")
        p.add_argument("--to", required=True)
        if name == "distance":
            p.add_argument("--format", choices=("text", "json"), default="text")
        p.set_defaults(func=func)

    p = with_spec(sub.add_parser("tau", help="distortion coefficient or a p_z curve"))
    p.add_argument("--p")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--curve", action="store_true")
    p.add_argument("--block-norms", help="block lengths for --curve (default all 1)")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tau)

    p = with_spec(sub.add_parser("ot", help="optimal plan between two measure CSVs"))
    p.add_argument("--mu0", required=True)
    p.add_argument("--mu1", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ot)

    p = with_spec(sub.add_parser("interpolate", help="displacement interpolant as a measure CSV"))
    p.add_argument("--mu0", required=True)
    p.add_argument("--mu1", required=True)
    p.add_argument("--plan")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("example36", help="split-transport example clouds and plan")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--a", default="1")
    p.add_argument("--b", default="1,0")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out-dir", default="example36_out")
    p.set_defaults(func=cmd_example36)

    p = sub.add_parser("verify", help="run a verification check and write its report")
    p.add_argument("check", choices=("calculus", "hessian", "jdi36", "mcp", "bm", "entropy", "bbl", "all"))
    p.add_argument("--spec", default="0:4")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=float)
    p.add_argument("--s-list")
    p.add_argument("--voxel-h", type=float)
    p.add_argument("--p-exponent", help="comma-separated exponents for bbl (inf allowed)")
    p.add_argument("--cells", type=int, default=12)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--a", default="1")
    p.add_argument("--b", default="1,0")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except LayoutError as exc:
        print(f"layout error: {exc}", file=sys.stderr)
        return EXIT_LAYOUT
    except io.FormatError as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except CutLocusError as exc:
        print(f"cut locus: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, OSError) as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
