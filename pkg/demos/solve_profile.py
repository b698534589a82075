"""Solve one gauged Q-ball and print its observables.

Usage: python demos/solve_profile.py [--epsilon 1.5] [--e 0.01] [--omega 0.8]
"""

import argparse
import math

from gaugedqball import numeric
from gaugedqball.model import ModelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epsilon", type=float, default=1.5)
    ap.add_argument("--e", type=float, default=0.01)
    ap.add_argument("--omega", type=float, default=0.8)
    args = ap.parse_args()

    prof = numeric.solve_selfconsistent(ModelParams(args.e, args.epsilon, omega=args.omega))
    q = numeric.charge(prof)
    en = numeric.energy(prof)
    _, decay = numeric.asymptotic_fit(prof)
    rf, rg = numeric.max_residuals(prof)
    print(f"surface radius  {prof.surface_r:.10g}")
    print(f"central value   {prof.f[0]:.10g}")
    print(f"charge          {q:.10g}")
    print(f"energy          {en.virial:.10g}  (direct {en.direct:.10g})")
    print(f"E / (omega Q)   {en.virial / (args.omega * q):.6f}")
    print(f"tail decay      {decay:.6f}  (expected {math.sqrt(1 - args.omega**2):.6f})")
    print(f"residuals       {rf:.2e}  {rg:.2e}")


if __name__ == "__main__":
    main()
