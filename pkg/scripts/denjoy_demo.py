"""Build a Denjoy counterexample and shrink the distortion on its wandering orbit."""
import argparse
import time

from circle_conjugacy.circle_core import estimate_rotation_number
from circle_conjugacy.denjoy_lab import DenjoySpec, build_denjoy, reduce_wandering_distortion
from circle_conjugacy.io import parse_alpha


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", default="golden")
    ap.add_argument("--total", type=float, default=0.5, help="total length of the wandering intervals")
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--tau", type=float, default=1e-4)
    args = ap.parse_args()

    alpha = parse_alpha(args.alpha)
    D = build_denjoy(DenjoySpec(alpha, total=args.total))
    lo, hi = estimate_rotation_number(D, 1000)
    print(f"rotation number in [{lo:.6f}, {hi:.6f}], alpha={float(alpha.value):.6f}")
    t0 = time.perf_counter()
    red = reduce_wandering_distortion(D, args.eps, tau=args.tau)
    cert = red.certificate
    print(f"{len(red.tracked)} tracked intervals, max distortion {cert['max_distortion']:.4f}, "
          f"direct {cert['max_direct']:.4f}, pass={cert['pass']} ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
