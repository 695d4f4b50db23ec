"""Relative rate below the lossless regime for M = 24, K = 5.

T sweep 1..10 at L = 3, and L sweep 1..4 at T = 5.
"""

from _common import ExperimentConfig, Sweep, base_parser, run

if __name__ == "__main__":
    p = base_parser(__doc__, "results/rate_{axis}.csv")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--snr-db", type=float, default=10.0)
    args = p.parse_args()
    common = dict(kind="rate-curve", M=24, K=5, seed=args.seed, trials=args.trials,
                  snr_db=args.snr_db)
    run(ExperimentConfig(L=3, sweep=Sweep("T", 1, 10), out_path=args.out.format(axis="T"),
                         **common))
    run(ExperimentConfig(L=3, T=5, sweep=Sweep("L", 1, 4), out_path=args.out.format(axis="L"),
                         **common))
