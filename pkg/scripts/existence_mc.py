"""Decomposition success at T_opt and T_opt - 1 for random Gaussian A, H."""

import csv
import sys

from waxkit.model import Dims, RngSpec, sample_gaussian
from waxkit.solver import t_opt, try_decompose

from _common import base_parser

if __name__ == "__main__":
    p = base_parser(__doc__, "-")
    p.add_argument("--trials", type=int, default=500)
    args = p.parse_args()
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["M", "K", "L", "T", "trials", "successes"])
    for M, K, L in [(12, 4, 2), (24, 5, 3), (60, 7, 6), (100, 10, 4)]:
        for T in (t_opt(M, K, L), t_opt(M, K, L) - 1):
            dims = Dims(M, K, L, T)
            ok = 0
            for s in range(args.trials):
                rng = RngSpec(args.seed + s, stream=M)
                h = sample_gaussian(rng.child(0), M, K)
                a = sample_gaussian(rng.child(1), M, T)
                ok += try_decompose(h, a, dims, rng.child(2)) is not None
            w.writerow([M, K, L, T, args.trials, ok])
