#!/usr/bin/env python3
"""Convergence benchmark over an (n, kappa) grid.

Runs gradient descent, Newton, and the eigendecomposition baseline on
seeded random SPD instances and writes one CSV row per (instance, method)
with iteration counts, the alpha log(r0/tol) prediction for descent, wall
time, and final residual.
"""

import argparse
import sys

from matsqrt import experiments, io
from matsqrt.gd import GdConfig


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="4,16,64", help="comma-separated n values")
    ap.add_argument("--kappas", default="1,10,100", help="comma-separated condition numbers")
    ap.add_argument("--methods", default="gd,newton,evd")
    ap.add_argument("--spectrum", choices=experiments.SPECTRUM_CHOICES, default="geometric")
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--c-step", type=float, default=1.0)
    ap.add_argument("--max-iters", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-o", "--output", default="benchmark_grid.csv")
    args = ap.parse_args(argv)

    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    kappas = [float(k) for k in args.kappas.split(",") if k.strip()]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    specs = [
        experiments.SpdInstanceSpec(
            n=n, kappa=k, spectrum=args.spectrum, seed=args.seed + i
        )
        for i, (n, k) in enumerate((n, k) for n in sizes for k in kappas)
    ]
    cfg = GdConfig(
        tol=args.tol, c_step=args.c_step, max_iters=args.max_iters, seed=args.seed
    )
    rows = experiments.convergence_benchmark(specs, methods, cfg)
    with open(args.output, "w") as f:
        io.write_table_csv(f, experiments.BENCHMARK_HEADER, (r.as_row() for r in rows))
    print(f"wrote {len(rows)} rows to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
