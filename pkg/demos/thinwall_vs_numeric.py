"""Compare the small-coupling thin-wall branch with the numeric solver along Q.

Usage: python demos/thinwall_vs_numeric.py [--epsilon 1.5] [--e 0.01]
"""

import argparse

import numpy as np

from gaugedqball import numeric, thinwall
from gaugedqball.model import ModelParams
from gaugedqball.thinwall import NoSolutionError


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epsilon", type=float, default=1.5)
    ap.add_argument("--e", type=float, default=0.01)
    args = ap.parse_args()
    eps, e = args.epsilon, args.e
    qm = thinwall.q_max(e, eps)
    print(f"Q_max = {qm:.6g}")
    print(f"{'Q/Q_max':>8} {'R num':>10} {'R tw':>10} {'E num':>13} {'E tw':>13} {'omega':>8}")
    prev = None
    for x in np.r_[0.1:1.0:0.1, 1.0, 1.05, 1.1, 1.14]:
        q = x * qm
        try:
            prev = numeric.solve_selfconsistent(ModelParams(e, eps, q=q), guess=prev)
        except NoSolutionError as exc:
            print(f"{x:8.2f}  {exc}")
            break
        tw = thinwall.small_coupling_solution(q, e, eps)
        print(f"{x:8.2f} {prev.surface_r:10.4f} {tw.r_star:10.4f} {numeric.energy(prev).virial:13.6e} "
              f"{tw.e_star:13.6e} {prev.omega:8.5f}")


if __name__ == "__main__":
    main()
