"""Lower bound on the number of ones for M = 60 over L <= K <= 7."""

from _common import ExperimentConfig, base_parser, run

if __name__ == "__main__":
    args = base_parser(__doc__, "results/bound_table.csv").parse_args()
    run(ExperimentConfig(kind="bound-table", M=60, K=7, L=1, seed=args.seed, out_path=args.out))
