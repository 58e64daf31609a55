"""Conjugate a smooth conjugate of the golden rotation towards the rotation itself.

Runs the main construction at a list of target distances and prints the chosen
time, the stage reports and the final C^1 distance for each.

    python3 scripts/flagship.py --eps 0.2 0.1 --csv /tmp/deriv.csv
"""
import argparse
import time

from circle_conjugacy import io
from circle_conjugacy.errors import BudgetExhausted
from circle_conjugacy.fixtures import conjugated_rotation
from circle_conjugacy.pipeline import PipelineConfig, conjugate_towards, write_derivative_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1])
    ap.add_argument("--c", type=float, default=0.4, help="strength of the conjugating map")
    ap.add_argument("--k-max", type=int, default=200)
    ap.add_argument("--csv", help="derivative samples for the first eps")
    args = ap.parse_args()

    fix = conjugated_rotation(c=args.c)
    for i, eps in enumerate(args.eps):
        t0 = time.perf_counter()
        try:
            h, rep = conjugate_towards(fix.f, fix.g, PipelineConfig(eps=eps, k_max=args.k_max))
        except BudgetExhausted as exc:
            rep = exc.report
            print(f"eps={eps}: budget exhausted after k in {[a['k'] for a in rep.attempts]}")
            continue
        dt = time.perf_counter() - t0
        sup, dd = rep.final_distance
        print(f"eps={eps}: k={rep.k} w={rep.w} distance=({sup:.2e}, {dd:.4f}) in {dt:.1f}s")
        print(io.dumps(rep.stages))
        if args.csv and i == 0:
            write_derivative_csv(args.csv, h, fix.f, fix.g)


if __name__ == "__main__":
    main()
