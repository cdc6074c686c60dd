#!/usr/bin/env python3
"""DFT threshold study (analytic and optimized plans) for N = 2..10.

The optimized study is slow: roughly N^2 / 100 times seven minutes per size
at the default budget on one core.  Use --workers to spread length points.
"""

import argparse
import csv
from pathlib import Path

from frodo import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-list", default="2-10")
    ap.add_argument("--no-optimize", action="store_true")
    ap.add_argument("--budget", type=int, default=300)
    ap.add_argument("--config", default="configs/default.ini")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("runs/dft-study"))
    args = ap.parse_args()

    argv = ["--config", args.config, "--out", str(args.out), "--workers", str(args.workers),
            "dft-study", "--n-list", args.n_list, "--budget", str(args.budget)]
    if not args.no_optimize:
        argv.append("--optimize")
    code = cli.main(argv)
    if code:
        raise SystemExit(code)
    with open(args.out / "dft_thresholds.csv") as fh:
        for row in csv.DictReader(fh):
            if row["level"] == "0.99":
                print(f"N={row['n']:>2} {row['family']:<15} {row['metric']:<11} {row['threshold_L_m'] or '-'}")


if __name__ == "__main__":
    main()
