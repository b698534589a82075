"""Print first- and second-order Picard gauge profiles next to the numeric one.

Usage: python demos/picard_gauge_profiles.py [--epsilon 1.5] [--e 0.05] [--omega 0.8]
"""

import argparse

import numpy as np

from gaugedqball import numeric, picard
from gaugedqball.model import ModelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epsilon", type=float, default=1.5)
    ap.add_argument("--e", type=float, default=0.05)
    ap.add_argument("--omega", type=float, default=0.8)
    args = ap.parse_args()

    prof = numeric.solve_selfconsistent(ModelParams(args.e, args.epsilon, omega=args.omega))
    sol = picard.picard_solution(args.omega, args.epsilon, args.e, q=numeric.charge(prof))
    R = sol.profile.r_match
    r = np.linspace(0.1 * R, 5 * R, 15)
    g_num = prof.interpolant()[1](r)
    g1, g2 = picard.g1_closed(r, sol), picard.g2_closed(r, sol)
    print(f"matching radius {R:.6g}, numeric surface radius {prof.surface_r:.6g}")
    print(f"{'r':>8} {'g numeric':>12} {'g1 - num':>11} {'g2 - num':>11}")
    for row in zip(r, g_num, g1 - g_num, g2 - g_num):
        print(f"{row[0]:8.3f} {row[1]:12.8f} {row[2]:11.2e} {row[3]:11.2e}")


if __name__ == "__main__":
    main()
