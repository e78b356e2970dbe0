#!/usr/bin/env python3
"""Stalling traces on the 2x2 hard instances.

For each requested condition number, runs both step-size regimes (large
step eta = 0.3, small step eta = 0.1), certifies the residual >= sigma/4
bound in exact arithmetic, and writes one trace CSV per run.  When the
float-64 trajectory leaves the case-1 saddle through round-off, the escape
step is printed; the exact dynamics never escape.
"""

import argparse
import sys

from matsqrt import experiments, io


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappas", default="10,100,1000")
    ap.add_argument("--prefix", default="lower_bound")
    args = ap.parse_args(argv)

    for kappa in (float(k) for k in args.kappas.split(",") if k.strip()):
        for case, eta in ((1, 0.3), (2, 0.1)):
            report = experiments.run_lower_bound(kappa, eta, case=case)
            path = f"{args.prefix}_k{kappa:g}_case{case}.csv"
            with open(path, "w") as f:
                io.write_table_csv(f, experiments.LOWER_BOUND_HEADER, report.rows())
            escape = (
                "none"
                if report.escape_step is None
                else f"t={report.escape_step} (round-off)"
            )
            print(
                f"kappa={kappa:g} case={case}: min residual "
                f"{report.min_residual:.6e} vs bound {report.bound:.6e}, "
                f"certified={report.certified}, float escape {escape} -> {path}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
