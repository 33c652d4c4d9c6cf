"""Finite-difference jets versus analytic jets as the step h shrinks.

Prints the max deviation of each residual field; the error should fall by
about 4 per halving until rounding takes over near h ~ 1e-3.

    python3 scripts/fd_convergence.py --surface catenoid
"""

import argparse

import numpy as np

from biconservative.analysis import GridSpec, evaluate_grid
from biconservative.gallery import make_surface

FIELDS = ("absH", "gaussK", "divS2_norm", "W_norm", "route_gap")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--surface", default="catenoid")
    ap.add_argument("--grid", default="12x12")
    ap.add_argument("--steps", nargs="+", type=float, default=[4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3, 1.25e-3])
    args = ap.parse_args()

    s = make_surface(args.surface)
    grid = GridSpec.parse(args.grid)
    exact, _, _, _ = evaluate_grid(s, grid)
    print(f"{'h':>10s} " + " ".join(f"{f:>12s}" for f in FIELDS))
    for h in args.steps:
        fd, _, _, _ = evaluate_grid(s, grid, "fd", h)
        errs = [np.max(np.abs(getattr(fd, f) - getattr(exact, f))) for f in FIELDS]
        print(f"{h:10.3e} " + " ".join(f"{e:12.3e}" for e in errs))


if __name__ == "__main__":
    main()
