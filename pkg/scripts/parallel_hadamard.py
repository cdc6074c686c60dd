#!/usr/bin/env python3
"""Per-rung Hadamard fidelity and leakage versus mismatch.

Prints, for a few mismatch values, the worst fidelity over the non-central
rungs: near 1 when all rungs are phase matched, near the far-detuned value
once the mismatch isolates the targeted pair.
"""

import argparse
import csv
from collections import defaultdict
from pathlib import Path

from frodo import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-rung", type=int, default=10)
    ap.add_argument("--out", type=Path, default=Path("runs/parallel-hadamard"))
    args = ap.parse_args()

    code = cli.main(["--out", str(args.out), "parallel-hadamard", "--max-rung", str(args.max_rung)])
    if code:
        raise SystemExit(code)
    worst = defaultdict(lambda: 1.0)
    with open(args.out / "parallel_hadamard.csv") as fh:
        for row in csv.DictReader(fh):
            if row["ell"] != "0":
                k = float(row["kappa"])
                worst[k] = min(worst[k], float(row["fidelity"]))
    for k in sorted(worst)[::20]:
        print(f"K = {k:10.4g}   worst off-target rung fidelity {worst[k]:.6f}")


if __name__ == "__main__":
    main()
