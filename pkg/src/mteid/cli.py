"""Command-line interface.

Subcommands: ``validate``, ``solve``, ``fit normal``, ``fit pdf``, ``eval``,
``plot``, and ``check``.  On failure the process exits non-zero with a
one-line reason on stdout-adjacent stderr, prefixed by a machine-readable
error code.  Exit codes: 0 success, 2 validation failure, 3 parse error,
4 any other solver/runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import model_io
from .diagram import validate_model, validate_order
from .errors import (
    DomainError,
    InvalidModelError,
    InvalidOrderError,
    MteError,
    NotPermutationError,
    ParseError,
    UnknownTemplateError,
)
from .fitting import FitSpec, fit_pdf, normal_template
from .fusion import solve
from .model_io import _target_function, load_model, save_policy, save_trace
from .oracle import monte_carlo_eu
from .potentials import marginalize_continuous

_VALIDATION_ERRORS = (InvalidOrderError, InvalidModelError, NotPermutationError)
_PARSE_ERRORS = (ParseError, UnknownTemplateError)


def _exit_code(error: MteError) -> int:
    if isinstance(error, _VALIDATION_ERRORS):
        return 2
    if isinstance(error, _PARSE_ERRORS):
        return 3
    return 4


def _parse_at(text: str, diagram) -> dict:
    point = {}
    for item in text.split(","):
        name, _, value = item.partition("=")
        var = diagram.variable(name.strip())
        if var is None:
            raise DomainError(f"unknown variable {name.strip()!r}")
        point[var.name] = value if not var.is_continuous else float(value)
    return point


def cmd_validate(args) -> int:
    diagram = load_model(args.model)
    diagnostics = validate_model(diagram)
    for diag in diagnostics:
        print(diag)
    if diagnostics:
        print(f"{len(diagnostics)} problem(s) found")
        return 2
    print("ok")
    return 0


def cmd_solve(args) -> int:
    diagram = load_model(args.model)
    order = [v.strip() for v in args.order.split(",")]
    result = solve(diagram, order)
    print(f"{result.meu:.6f}")
    if args.policy:
        save_policy(result, args.policy)
    if args.trace:
        save_trace(result, args.trace)
    return 0


def cmd_fit(args) -> int:
    if args.what == "normal":
        potential = normal_template(args.mu, args.sigma)
        mass = marginalize_continuous(potential, "x").evaluate({})
        print(f"mass {mass:.9f}")
    else:
        lo, hi = (float(v) for v in args.interval.split(","))
        splits = ()
        if args.pieces > 1:
            step = (hi - lo) / args.pieces
            splits = tuple(lo + i * step for i in range(1, args.pieces))
        if args.splits:
            splits = tuple(float(s) for s in args.splits.split(","))
        result = fit_pdf(
            FitSpec(
                target=_target_function(args.target),
                interval=(lo, hi),
                split_points=splits,
                terms_per_piece=args.terms,
                grid_n=args.grid,
                normalize_after=args.normalize,
                seed=args.seed,
            )
        )
        potential = result.potential
        print(f"sse {result.sse:.6g} max_abs_error {result.max_abs_error:.6g}")
    if args.out:
        doc = {
            "variables": [model_io._variable_dict(v) for v in potential.domain],
            "kind": potential.kind,
            "pieces": [model_io._piece_dict(p) for p in potential.pieces],
        }
        model_io._atomic_write(args.out, json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return 0


def cmd_eval(args) -> int:
    diagram = load_model(args.model)
    factor = diagram.factor_named(args.potential)
    if factor is None:
        raise DomainError(f"no potential named {args.potential!r}")
    point = _parse_at(args.at, diagram)
    print(repr(factor.potential.evaluate(point)))
    return 0


def cmd_plot(args) -> int:
    diagram = load_model(args.model)
    factor = diagram.factor_named(args.potential)
    if factor is None:
        raise DomainError(f"no potential named {args.potential!r}")
    potential = factor.potential
    var = potential.variable(args.var)
    if not var.is_continuous:
        raise DomainError(f"{args.var} is not continuous")
    fixed = _parse_at(args.at, diagram) if args.at else {}
    missing = [
        v.name for v in potential.domain if v.name != var.name and v.name not in fixed
    ]
    if missing:
        raise DomainError(f"fix the remaining variables with --at: {missing}")
    lo, hi = var.support
    lines = ["x,value"]
    for i in range(args.points):
        x = lo if args.points == 1 else lo + (hi - lo) * i / (args.points - 1)
        value = potential.evaluate({**fixed, var.name: x})
        lines.append(f"{x!r},{value!r}")
    model_io._atomic_write(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.points} rows to {args.out}")
    return 0


def cmd_check(args) -> int:
    diagram = load_model(args.model)
    order = [v.strip() for v in args.order.split(",")]
    result = solve(diagram, order)
    mean, se = monte_carlo_eu(diagram, result.policies, args.n, args.seed)
    print(f"meu {result.meu:.6f} simulated {mean:.6f} se {se:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mteid",
        description="Solve influence diagrams built from piecewise-exponential potentials.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="run the deletion sequence and print the value")
    p.add_argument("model")
    p.add_argument("--order", required=True, help="comma-separated deletion sequence")
    p.add_argument("--policy", help="write policies to this JSON file")
    p.add_argument("--trace", help="write the per-step trace to this text file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fit", help="build template or fitted potentials")
    fit_sub = p.add_subparsers(dest="what", required=True)
    pn = fit_sub.add_parser("normal")
    pn.add_argument("--mu", type=float, required=True)
    pn.add_argument("--sigma", type=float, required=True)
    pn.add_argument("--out")
    pn.set_defaults(func=cmd_fit, what="normal")
    pp = fit_sub.add_parser("pdf")
    pp.add_argument("--target", required=True, help="e.g. beta:3.2,3.2")
    pp.add_argument("--interval", required=True, help="lo,hi")
    pp.add_argument("--pieces", type=int, default=1)
    pp.add_argument("--splits", help="explicit interior split points, comma-separated")
    pp.add_argument("--terms", type=int, default=3)
    pp.add_argument("--grid", type=int, default=101)
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--normalize", action="store_true")
    pp.add_argument("--out")
    pp.set_defaults(func=cmd_fit, what="pdf")

    p = sub.add_parser("eval", help="evaluate a named potential at a point")
    p.add_argument("model")
    p.add_argument("--potential", required=True)
    p.add_argument("--at", required=True, help="var=value,var=value,...")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="sample a potential along one variable as CSV")
    p.add_argument("model")
    p.add_argument("--potential", required=True)
    p.add_argument("--var", required=True)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--at", help="fix remaining variables: var=value,...")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("check", help="cross-check the solved value by simulation")
    p.add_argument("model")
    p.add_argument("--order", required=True)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MteError as error:
        print(f"{error.code}: {error}", file=sys.stderr)
        return _exit_code(error)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
