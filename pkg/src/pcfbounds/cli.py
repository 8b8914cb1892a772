"""``pcfbounds`` command line.

Exit codes: 0 success (for ``order``: the relation holds), 1 ``order`` does
not hold, 2 parse or type error, 3 free variable not usable at ``nat``.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from pcfbounds.bounds import BoundsQuery, refine, single
from pcfbounds.groundsem import SubDist, parse_subdist
from pcfbounds.krivine import kreval_term
from pcfbounds.operational import estimate
from pcfbounds.poly import poly_to_json, render_poly, tree_to_poly
from pcfbounds.syntax import (
    LOWER,
    UPPER,
    Nat,
    ParseError,
    Term,
    TypeCheckError,
    contains_errconv,
    ground_context,
    parse,
    term_preorder_leq,
    typecheck,
    unfold,
    wrap_observe,
)

EXIT_OK, EXIT_NO, EXIT_TYPE, EXIT_FREE = 0, 1, 2, 3


class UsageError(Exception):
    def __init__(self, message: str, code: int = EXIT_TYPE):
        super().__init__(message)
        self.code = code


def _rational(text: str) -> Fraction:
    if any(c in text for c in ".eE"):
        raise argparse.ArgumentTypeError(f"{text!r}: give an exact rational such as 1/100")
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{text!r} is not a rational") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _index_set(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        out = sorted({int(part) for part in text.split(",")})
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r}: expected comma-separated naturals") from None
    if out and out[0] < 0:
        raise argparse.ArgumentTypeError("indices must be naturals")
    return out


def parse_dists(specs: Sequence[str]) -> dict[str, SubDist]:
    """``["x={0: 1/2}", "y={err: 1}"]`` to a map; empty strings are ignored."""
    out: dict[str, SubDist] = {}
    for spec in specs:
        if not spec.strip():
            continue
        name, sep, body = spec.partition("=")
        name = name.strip()
        if not sep or not name.isidentifier():
            raise UsageError(f"--dist expects NAME={{...}}, got {spec!r}")
        if name in out:
            raise UsageError(f"--dist given twice for {name}")
        try:
            out[name] = parse_subdist(body)
        except ValueError as exc:
            raise UsageError(f"--dist {name}: {exc}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pcfbounds", description="Certified convergence bounds for probabilistic PCF.")
    sub = ap.add_subparsers(dest="command", required=True)

    def program(p: argparse.ArgumentParser) -> None:
        p.add_argument("file", help="program file, or - for stdin")

    b = sub.add_parser("bound", help="interval for the probability of convergence")
    program(b)
    b.add_argument("--dist", action="append", default=[], metavar="X={n: p/q, ..., err: p/q}")
    b.add_argument("--k", type=int, default=4)
    b.add_argument("--epsilon", type=_rational)
    b.add_argument("--k-max", type=int, default=64)
    b.add_argument("--J", type=_index_set)
    b.add_argument("--json", action="store_true")
    b.add_argument("--raw", action="store_true", help="bound err+ of the program itself, without wrapping")

    r = sub.add_parser("run", help="Monte Carlo run of a closed program")
    program(r)
    r.add_argument("--samples", type=int, default=1000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-steps", type=int, default=10_000)
    r.add_argument("--json", action="store_true")

    o = sub.add_parser("order", help="decide the term preorder A <= B")
    o.add_argument("file_a")
    o.add_argument("file_b")

    p = sub.add_parser("poly", help="polynomial of the unfolded, wrapped program")
    program(p)
    p.add_argument("--J", type=_index_set, default=[])
    p.add_argument("--polarity", choices=["lower", "upper"], default="lower")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--raw", action="store_true")
    p.add_argument("--json", action="store_true")

    c = sub.add_parser("check", help="parse and typecheck only")
    program(c)
    return ap


def read_program(path: str) -> Term:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    try:
        return parse(text)
    except ParseError as exc:
        raise UsageError(f"{path}:{exc}") from None


def check_ground(t: Term, path: str) -> dict:
    """Type ``t`` at ``nat`` with every free variable at ``nat``."""
    ctx = ground_context(t.free_vars)
    try:
        ty = typecheck(ctx, t)
    except TypeCheckError as exc:
        if exc.variable is not None:
            raise UsageError(
                f"{path}: free variable {exc.variable!r} is used at a non-ground type; "
                "free variables must have type nat",
                EXIT_FREE,
            ) from None
        raise UsageError(f"{path}: type error: {exc}") from None
    if not isinstance(ty, Nat):
        raise UsageError(f"{path}: program has type {ty}, expected nat")
    return ctx


def _warn_errconv(t: Term, raw: bool) -> None:
    if not raw and contains_errconv(t):
        print(
            "warning: the program itself uses err+, which the bound counts as convergence; "
            "pass --raw to bound err+ directly",
            file=sys.stderr,
        )


def cmd_bound(args: argparse.Namespace) -> int:
    t = read_program(args.file)
    ctx = check_ground(t, args.file)
    dists = parse_dists(args.dist)
    extra = sorted(set(dists) - set(ctx))
    if extra:
        print(f"warning: --dist for unused variable(s) {', '.join(extra)}", file=sys.stderr)
    missing = sorted(set(ctx) - set(dists))
    if missing:
        raise UsageError(f"no --dist for free variable(s) {', '.join(missing)}", EXIT_FREE)
    _warn_errconv(t, args.raw)
    q = BoundsQuery(
        t,
        {x: dists[x] for x in ctx},
        k=args.k,
        J="auto" if args.J is None else args.J,
        epsilon=args.epsilon,
        k_max=args.k_max,
        raw=args.raw,
        ctx=ctx,
    )
    report = refine(q) if args.epsilon is not None else single(q)
    print(json.dumps(report.to_json(), indent=2) if args.json else report.to_text())
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    t = read_program(args.file)
    if t.free_vars:
        raise UsageError(f"{args.file}: run needs a closed program; free: {', '.join(sorted(t.free_vars))}", EXIT_FREE)
    check_ground(t, args.file)
    est = estimate(t, args.samples, args.seed, args.max_steps)
    rows = est.table()
    if args.json:
        out = {
            "samples": est.n,
            "seed": args.seed,
            "outcomes": [{"outcome": lab, "count": c, "freq": f, "stderr": se} for lab, c, f, se in rows],
        }
        print(json.dumps(out, indent=2))
    else:
        print(f"{'outcome':<10}{'count':>8}  {'freq':>8}  {'stderr':>8}")
        for lab, c, f, se in rows:
            print(f"{lab:<10}{c:>8}  {f:>8.4f}  {se:>8.4f}")
    return EXIT_OK


def cmd_order(args: argparse.Namespace) -> int:
    a, b = read_program(args.file_a), read_program(args.file_b)
    ctx = ground_context(a.free_vars | b.free_vars)
    try:
        ty = typecheck(ctx, a)
        holds = term_preorder_leq(a, b, ctx, ty)
    except TypeCheckError as exc:
        raise UsageError(f"type error: {exc}") from None
    print("yes" if holds else "no")
    return EXIT_OK if holds else EXIT_NO


def cmd_poly(args: argparse.Namespace) -> int:
    t = read_program(args.file)
    ctx = check_ground(t, args.file)
    observed = t if args.raw else wrap_observe(t)
    m = unfold(observed, args.k, LOWER if args.polarity == "lower" else UPPER, ctx)
    p = tree_to_poly(kreval_term(m, ctx, args.J))
    print(json.dumps(poly_to_json(p), indent=2) if args.json else render_poly(p))
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    t = read_program(args.file)
    ctx = check_ground(t, args.file)
    free = ", ".join(f"{x}: nat" for x in ctx)
    print("ok: nat" + (f"  [{free}]" if free else ""))
    return EXIT_OK


COMMANDS = {"bound": cmd_bound, "run": cmd_run, "order": cmd_order, "poly": cmd_poly, "check": cmd_check}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TYPE


if __name__ == "__main__":
    sys.exit(main())
