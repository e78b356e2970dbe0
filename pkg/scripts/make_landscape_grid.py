#!/usr/bin/env python3
"""Objective and negative-gradient grid for the 2x2 diagonal restriction.

Samples f(diag(x, y)) = (x^2 - 4)^2 + (y^2 - 2)^2 on a uniform grid and
appends the four stationary points with closed-form values.  The CSV is
ready for contour or quiver plotting.
"""

import argparse
import sys

from matsqrt import experiments, io


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--grid-min", type=float, default=0.0)
    ap.add_argument("--grid-max", type=float, default=3.0)
    ap.add_argument("-o", "--output", default="landscape_grid.csv")
    args = ap.parse_args(argv)

    rows = experiments.landscape_grid(args.grid_min, args.grid_max, args.steps)
    with open(args.output, "w") as f:
        io.write_table_csv(f, experiments.LANDSCAPE_HEADER, rows)
    print(f"wrote {len(rows)} rows to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
