#!/usr/bin/env python3
"""Haar-random ensembles for several gate sizes over the length grid.

Writes one run directory per N under --out and prints the length at which the
median fidelity first stays above 0.99.
"""

import argparse
import csv
from pathlib import Path

from frodo import cli
from frodo.synthesis import threshold_length


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-list", default="2,3,4,5")
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--config", default="configs/default.ini")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("runs/ensembles"))
    args = ap.parse_args()

    for n in (int(x) for x in args.n_list.split(",")):
        out = args.out / f"n{n}"
        code = cli.main(["--config", args.config, "--seed", str(args.seed), "--out", str(out),
                         "--workers", str(args.workers), "ensemble", "--n", str(n),
                         "--samples", str(args.samples)])
        if code:
            raise SystemExit(code)
        with open(out / "ensemble_summary.csv") as fh:
            rows = list(csv.DictReader(fh))
        curve = [(float(r["L_m"]), float(r["fidelity_median"])) for r in rows]
        print(f"N={n}: median F >= 0.99 from L = {threshold_length(curve, 0.99)} m")


if __name__ == "__main__":
    main()
