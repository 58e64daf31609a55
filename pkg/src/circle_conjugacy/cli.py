"""Command-line interface; every subcommand prints JSON (or a table) to stdout.

Exit codes: 0 pass, 2 certificate failure, 3 infeasible, 4 input error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .errors import CircleConjugacyError, InputError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _emit(obj):
    sys.stdout.write(io.dumps(obj) + "\n")


def cmd_rotnum(args):
    from .circle_core import estimate_rotation_number

    f = io.load_map(args.map)
    lo, hi = estimate_rotation_number(f, args.n, args.x)
    _emit({"n": args.n, "interval": [lo, hi], "estimate": 0.5 * (lo + hi)})
    return 0


def cmd_schedule(args):
    from .rotation_combinatorics import characteristic_times

    alpha = io.parse_alpha(args.alpha, args.precision)
    sched = characteristic_times(alpha, args.n_max)
    if args.json:
        _emit(sched.to_json())
        return 0
    cols = ("k", "N", "r", "s", "w", "adapted", "reason")
    print("  ".join(f"{c:>7}" for c in cols))
    for e in sched.entries:
        row = (e.k, e.N, e.r, e.s, "-" if e.w is None else e.w, str(bool(e.adapted)).lower(), e.reason or "")
        print("  ".join(f"{str(v):>7}" for v in row))
    return 0


def cmd_segment(args):
    from .adapted_segments import analyze, orbit_segment

    f = io.load_map(args.map)
    res = analyze(orbit_segment(f, args.x, args.n))
    _emit(res.to_json())
    return 0


def cmd_denjoy_build(args):
    from .circle_core import estimate_rotation_number
    from .denjoy_lab import build_denjoy

    spec = io.denjoy_spec_from_json(io.load_json(args.spec))
    D = build_denjoy(spec)
    lo, hi = estimate_rotation_number(D, 1000)
    worst = 0.0
    for m, arc in D.wandering_intervals():
        if m == spec.n_trunc:
            continue
        a, b = arc.lift_bounds
        worst = max(worst, abs(float(D.lift(b) - D.lift(a)) - D.length(m + 1)))
    out = {"map": D.to_json(), "total": D.T, "intervals": 2 * spec.n_trunc + 1,
           "rotation_interval": [lo, hi], "alpha": float(spec.alpha.value),
           "contains_alpha": bool(lo <= float(spec.alpha.value) <= hi), "image_length_error": worst}
    if args.out:
        Path(args.out).write_text(io.dumps(D.to_json()) + "\n")
    _emit(out)
    return 0


def cmd_perturb(args):
    from .ratio_perturbation import perturb_to_ratios
    from .rotation_combinatorics import characteristic_times

    g = io.load_map(args.map)
    w = args.w
    if w is None:
        if args.alpha is None:
            raise InputError("perturb needs --w or --alpha to derive the wandering time")
        try:
            w = characteristic_times(io.parse_alpha(args.alpha), args.k + 1).entry(args.k).w
        except KeyError:
            raise InputError(f"k={args.k} is not a characteristic time of alpha") from None
    g1 = perturb_to_ratios(g, args.y, args.k, w, args.r0, args.rn, args.eps)
    _emit({"plan": g1.plan.to_json(), "certificate": g1.report, "base_point": g1.base_point})
    return 0


def cmd_conjugate(args):
    from .pipeline import PipelineConfig, conjugate_towards, write_derivative_csv
    from .errors import BudgetExhausted

    f, g = io.load_map(args.f), io.load_map(args.g)
    cfg = PipelineConfig(eps=args.eps, k_max=args.k_max, x=args.x, y=args.y, alpha=args.alpha,
                         seed=args.seed)
    try:
        h, report = conjugate_towards(f, g, cfg)
    except BudgetExhausted as exc:
        if args.report:
            Path(args.report).write_text(io.dumps(exc.report.to_json()) + "\n")
        raise
    if args.report:
        Path(args.report).write_text(io.dumps(report.to_json()) + "\n")
    if args.csv:
        write_derivative_csv(args.csv, h, f, g)
    _emit(report.to_json())
    return 0 if report.passed else 2


def cmd_verify(args):
    from .circle_core import c1_distance

    f, g = io.load_map(args.f), io.load_map(args.g)
    sup, dd = c1_distance(f, g, args.grid)
    _emit({"c1_distance": [sup, dd]})
    return 0


def build_parser():
    p = _Parser(prog="circle-conjugacy", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("rotnum", help="rotation-number interval")
    s.add_argument("map")
    s.add_argument("-n", type=int, default=1000)
    s.add_argument("-x", type=float, default=0.0)
    s.set_defaults(func=cmd_rotnum)

    s = sub.add_parser("schedule", help="characteristic times of alpha")
    s.add_argument("alpha")
    s.add_argument("--n-max", type=int, default=200)
    s.add_argument("--precision", type=int, default=128)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_schedule)

    s = sub.add_parser("segment", help="adaptedness and ratios of an orbit segment")
    s.add_argument("map")
    s.add_argument("-x", type=float, default=0.0)
    s.add_argument("-n", type=int, required=True)
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("denjoy-build", help="build and check a Denjoy fixture")
    s.add_argument("spec")
    s.add_argument("--out")
    s.set_defaults(func=cmd_denjoy_build)

    s = sub.add_parser("perturb", help="perturb g to prescribed ratios at time k")
    s.add_argument("map")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--r0", type=float, required=True)
    s.add_argument("--rn", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--w", type=int)
    s.add_argument("--alpha")
    s.add_argument("-y", type=float, default=0.0)
    s.set_defaults(func=cmd_perturb)

    s = sub.add_parser("conjugate", help="run the full construction")
    s.add_argument("f")
    s.add_argument("g")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--k-max", type=int, default=200)
    s.add_argument("--alpha")
    s.add_argument("-x", type=float, default=0.0)
    s.add_argument("-y", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--report")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_conjugate)

    s = sub.add_parser("verify", help="C^1 distance between two maps")
    s.add_argument("f")
    s.add_argument("g")
    s.add_argument("--grid", type=int, default=2000)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CircleConjugacyError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        for attr in ("needed_w", "gap"):
            if getattr(exc, attr, None) is not None:
                err[attr] = getattr(exc, attr)
        rep = getattr(exc, "report", None)
        if rep is not None:
            err["report"] = rep.to_json() if hasattr(rep, "to_json") else rep
        _emit(err)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
