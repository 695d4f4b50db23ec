"""Sparsest valid {0,1} combiner found for each (L, K) cell, M = 60.

One CSV per cell under --out-dir; the full grid takes a few hours on one
core, so --cells restricts it (e.g. --cells 6:7 2:3).
"""

import argparse
from pathlib import Path

from _common import ExperimentConfig, run

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--budget", type=int, default=4000)
    p.add_argument("--cells", nargs="*", help="L:K pairs; default all L <= K <= 7")
    p.add_argument("--out-dir", default="results/sparse")
    args = p.parse_args()
    if args.cells:
        cells = [tuple(int(x) for x in c.split(":")) for c in args.cells]
    else:
        cells = [(l, k) for k in range(1, 8) for l in range(1, k + 1) if 60 % l == 0]
    for l, k in cells:
        out = Path(args.out_dir) / f"L{l}_K{k}.csv"
        run(ExperimentConfig(kind="sparse-search", M=60, K=k, L=l, seed=args.seed,
                             trials=args.trials, budget=args.budget, out_path=str(out)))
