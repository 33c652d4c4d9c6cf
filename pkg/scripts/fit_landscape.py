"""Tabulate fit objectives against the free parameter of a constrained family.

Shows which objectives single out the closed-form value.  On the cone and the
S^3 example the W objective is flat (every beta is the same surface up to a
reparametrisation), so only the objectives that do vary are informative.

    python3 scripts/fit_landscape.py --surface cone --param k=1 --param alpha=0.8
"""

import argparse

import numpy as np

from biconservative.analysis import GridSpec
from biconservative.errors import GeometryError
from biconservative.fit import OBJECTIVES, FitProblem, objective_value
from biconservative.gallery import resolve_family, solve_family_constraint


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--surface", default="cone")
    ap.add_argument("--free", default="beta")
    ap.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    ap.add_argument("--range", nargs=2, type=float, default=None, metavar=("LO", "HI"))
    ap.add_argument("--samples", type=int, default=9)
    ap.add_argument("--grid", default="16x16")
    args = ap.parse_args()

    family = resolve_family(args.surface)
    fixed = {k: float(v) for k, v in (p.split("=", 1) for p in args.param)}
    if not fixed and family == "cone_r3":
        fixed = {"k": 1.0, "alpha": 0.8}
    target = solve_family_constraint(family, fixed)[args.free]
    lo, hi = args.range or (0.7 * target, 1.3 * target)
    grid = GridSpec.parse(args.grid)
    problems = {o: FitProblem(family, (args.free,), fixed, o, grid) for o in OBJECTIVES}

    print(f"# {family} {fixed}; closed-form {args.free} = {target:.6f}")
    print(f"{args.free:>10s} " + " ".join(f"{o:>12s}" for o in OBJECTIVES))
    for x in np.linspace(lo, hi, args.samples):
        row = []
        for o in OBJECTIVES:
            try:
                row.append(f"{objective_value(problems[o], {args.free: x}):12.4e}")
            except GeometryError:
                row.append(f"{'n/a':>12s}")
        print(f"{x:10.5f} " + " ".join(row))


if __name__ == "__main__":
    main()
