"""Command line front end.

Exit codes: 0 success, 1 contract violation (``validate`` on a non-metric,
failing ``check``), 2 input error.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import checks
from .core import ScaleSet, validate_metric
from .dimension import (
    adim_estimate,
    default_scales,
    packing_slope_estimate,
    ubdim_estimate,
)
from .errors import MetricFactorError
from .factorize import (
    DEFAULT_TAU,
    build_context,
    embed_phi,
    extend_l1,
    extend_linf,
    scale_valued_factor,
    truncate_factor,
)
from .gen import GenSpec, generate
from .quotient import quotient
from .retraction import retract_bdhm, retract_engelking
from .spacefile import SpaceDoc, SpaceFileError, load, save


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None


def _pairs(text: str) -> list[tuple[float, float]]:
    out = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        vals = _floats(chunk.replace(":", ","))
        if len(vals) != 2:
            raise UsageError(f"pairs are written R:r separated by ';', got {chunk!r}")
        out.append((vals[0], vals[1]))
    return out


def _subset(doc: SpaceDoc, spec: str) -> tuple:
    if spec in doc.subsets:
        return doc.subsets[spec]
    labels = tuple(s.strip() for s in spec.split(",") if s.strip())
    unknown = [x for x in labels if x not in doc.space]
    if unknown:
        raise UsageError(f"--subset names unknown labels {unknown}")
    if not labels:
        raise UsageError("--subset is empty")
    return labels


def _write(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_validate(args) -> int:
    doc = load(args.space)
    rep = validate_metric(doc.space)
    print(json.dumps(rep.as_dict(), indent=1))
    return 0 if rep.is_metric else 1


def cmd_quotient(args) -> int:
    doc = load(args.space)
    F = _subset(doc, args.subset)
    q = quotient(doc.space, F)
    out = SpaceDoc(
        q.space,
        extra={"theta": q.theta, "projection": {str(k): str(v) for k, v in q.projection.items()}},
    )
    save(out, args.output)
    return 0


def _mapping_table(mapping: dict) -> str:
    lines = ["label\timage"] + [f"{k}\t{v}" for k, v in mapping.items()]
    return "\n".join(lines) + "\n"


def cmd_retract(args) -> int:
    doc = load(args.space)
    F = _subset(doc, args.subset)
    if args.method == "engelking":
        r = retract_engelking(doc.space, F)
    else:
        r = retract_bdhm(doc.space, F, args.tau)
    _write(_mapping_table(r.mapping), args.output)
    if args.trace:
        if r.trace is None:
            raise UsageError("--trace is only available for the engelking method")
        _write(json.dumps(r.trace.as_dict(), indent=1) + "\n", args.trace)
    return 0


def cmd_embed(args) -> int:
    doc = load(args.space)
    base = load(args.lambda_).space if args.lambda_ else doc.space
    if base.labels != doc.space.labels:
        raise UsageError("--lambda must be a metric on the same labels")
    F = _subset(doc, args.subset)
    ctx = build_context(base, F, tau=args.tau)
    phi = embed_phi(ctx)
    lines = ["label\tretraction\tprojection"] + [f"{x}\t{a}\t{b}" for x, (a, b) in phi.items()]
    _write("\n".join(lines) + "\n", args.output)
    return 0


def cmd_extend(args) -> int:
    fdoc = load(args.space)
    xdoc = load(args.context)
    F = _subset(xdoc, args.subset) if args.subset else tuple(fdoc.space.labels)
    ctx = build_context(xdoc.space, F, tau=args.tau)
    S = ScaleSet.parse(args.scale_set) if args.scale_set else None
    if args.v not in (None, "auto"):
        ctx = ctx.with_factor(load(args.v).space)
    elif S is not None:
        ctx = ctx.with_factor(scale_valued_factor(ctx.factor, S))
    if args.eta is not None:
        ctx = ctx.with_factor(truncate_factor(ctx.factor, args.eta))
    if args.norm == "l1":
        ext = extend_l1(ctx, fdoc.space)
    else:
        ext = extend_linf(ctx, fdoc.space, S)
    extra = {"norm": args.norm}
    if args.eta is not None:
        extra["eta"] = args.eta
    save(SpaceDoc(ext, {"F": ctx.subset}, S, extra), args.output)
    return 0


def cmd_dim(args) -> int:
    doc = load(args.space)
    m = doc.space
    if args.estimator == "assouad":
        pairs = _pairs(args.pairs) if args.pairs else None
        est = adim_estimate(m, pairs)
        print(f"assouad\t{est.value:.6f}")
        print("center\tR\tr\tcount\tratio")
        for x, R, r, count, ratio in est.table:
            print(f"{x}\t{R!r}\t{r!r}\t{count}\t{ratio:.6f}")
        return 0
    scales = _floats(args.scales) if args.scales else default_scales(m, args.base)
    fn = ubdim_estimate if args.estimator == "box" else packing_slope_estimate
    est = fn(m, scales)
    print(f"{args.estimator}\t{est.value:.6f}")
    print("r\tcount\tresidual")
    for r, n, res in est.rows():
        print(f"{r!r}\t{n}\t{res:+.3e}")
    return 0


def cmd_check(args) -> int:
    if args.suite not in checks.SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(checks.SUITES)}")
    if args.replay:
        fails = checks.replay(args.suite, load(args.replay))
        print(json.dumps({"suite": args.suite, "passed": not fails, "failures": fails}, indent=1, sort_keys=True))
        return 1 if fails else 0
    res = checks.run_suite(args.suite, args.instances, args.seed, args.size, args.jobs)
    if args.report == "json":
        sys.stdout.write(res.dumps())
    else:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {args.suite}: {args.instances} instances, seed {res.report['seed']}, "
              f"{res.report['failing_instances']} failing")
    if res.counterexample is not None:
        text = res.counterexample.dumps()
        if args.counterexample:
            _write(text, args.counterexample)
        else:
            sys.stderr.write(text)
    return 0 if res.passed else 1


def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else checks.default_seed()
    spec = GenSpec(
        args.kind.replace("-", "_"),
        n=args.n,
        m=args.m,
        depth=args.depth,
        step=args.step,
        seed=seed,
        height_base=args.base,
        ambient_dim=args.dim,
    )
    save(SpaceDoc(generate(spec), extra={"generator": {"kind": spec.kind, "seed": seed}}), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="metricfactor", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check metric and ultrametric axioms")
    s.add_argument("space", nargs="?", default="-")
    s.set_defaults(fn=cmd_validate)

    s = sub.add_parser("quotient", help="collapse a subset to one point")
    s.add_argument("space", nargs="?", default="-")
    s.add_argument("--subset", required=True, help="subset block name or comma-separated labels")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_quotient)

    s = sub.add_parser("retract", help="retraction onto a subset")
    s.add_argument("space", nargs="?", default="-")
    s.add_argument("--subset", required=True)
    s.add_argument("--method", choices=("engelking", "bdhm"), default="engelking")
    s.add_argument("--tau", type=float, default=DEFAULT_TAU)
    s.add_argument("--trace")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_retract)

    s = sub.add_parser("embed", help="tabulate x -> (r(x), pi(x))")
    s.add_argument("space", nargs="?", default="-")
    s.add_argument("--subset", required=True)
    s.add_argument("--lambda", dest="lambda_", help="auxiliary metric file (defaults to the space)")
    s.add_argument("--tau", type=float, default=DEFAULT_TAU)
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_embed)

    s = sub.add_parser("extend", help="extend a metric on F to X")
    s.add_argument("space", help="metric on F")
    s.add_argument("--context", required=True, help="metric on X")
    s.add_argument("--subset", help="subset of the context (defaults to the labels of the space)")
    s.add_argument("--norm", choices=("l1", "linf"), required=True)
    s.add_argument("--v", default="auto", help="'auto' (the quotient metric, or its S-valued ultrametric rounding with --scale-set) or a metric file on the quotient labels")
    s.add_argument("--eta", type=float)
    s.add_argument("--scale-set", help="all | geometric:Q | explicit:a,b,...")
    s.add_argument("--tau", type=float, default=DEFAULT_TAU)
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_extend)

    s = sub.add_parser("dim", help="dimension estimates")
    s.add_argument("space", nargs="?", default="-")
    s.add_argument("--estimator", choices=("box", "assouad", "pack"), required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--scales", help="comma-separated radii")
    g.add_argument("--pairs", help="R:r pairs separated by ';'")
    s.add_argument("--base", type=float, default=2.0, help="base of the default scale grid")
    s.set_defaults(fn=cmd_dim)

    s = sub.add_parser("check", help="run an invariant suite")
    s.add_argument("suite", help=", ".join(checks.SUITES))
    s.add_argument("--instances", type=int, default=200)
    s.add_argument("--seed", type=int)
    s.add_argument("--size", type=int, default=40)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--report", choices=("text", "json"), default="text")
    s.add_argument("--counterexample", help="where to write a failing instance (default stderr)")
    s.add_argument("--replay", help="re-run the suite on a saved counterexample")
    s.set_defaults(fn=cmd_check)

    s = sub.add_parser("gen", help="write a fixture")
    s.add_argument("kind", choices=("cantor", "line", "grid", "random-ultra", "random-metric"))
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--seed", type=int)
    s.add_argument("--base", type=float, default=2.0, help="height base for random-ultra")
    s.add_argument("--dim", type=int, default=2, help="ambient dimension for random-metric")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (SpaceFileError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MetricFactorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
