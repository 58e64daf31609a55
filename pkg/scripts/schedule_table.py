"""Characteristic times and rotation ratios for a few rotation numbers."""
import argparse

from circle_conjugacy.adapted_segments import rotation_ratios
from circle_conjugacy.io import parse_alpha
from circle_conjugacy.rotation_combinatorics import characteristic_times


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("alphas", nargs="*", default=["golden", "sqrt2-1", "e-2"])
    ap.add_argument("--n-max", type=int, default=4096)
    args = ap.parse_args()
    for name in args.alphas:
        alpha = parse_alpha(name)
        print(f"# {name}")
        print(f"{'k':>6} {'N':>6} {'r':>6} {'s':>6} {'w':>3}  R0        Rn")
        for e in characteristic_times(alpha, args.n_max).adapted_entries():
            R0, Rn = rotation_ratios(alpha, e.k)
            print(f"{e.k:>6} {e.N:>6} {e.r:>6} {e.s:>6} {e.w:>3}  {float(R0):.6f}  {float(Rn):.6f}")
        print()


if __name__ == "__main__":
    main()
