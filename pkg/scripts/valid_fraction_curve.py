"""Share of valid random {0,1} combiners against the percentage of ones
(M = 24, L = 3, K = 4..6, T = T_opt)."""

from _common import ExperimentConfig, Sweep, base_parser, run

if __name__ == "__main__":
    p = base_parser(__doc__, "results/valid_fraction_K{k}.csv")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--lo", type=int, default=10)
    p.add_argument("--hi", type=int, default=60)
    args = p.parse_args()
    for k in (4, 5, 6):
        run(ExperimentConfig(kind="validate", M=24, K=k, L=3, seed=args.seed,
                             trials=args.trials, sweep=Sweep("ones_fraction", args.lo, args.hi),
                             out_path=args.out.format(k=k)))
