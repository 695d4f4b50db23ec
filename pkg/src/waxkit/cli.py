"""Command-line entry point: ``waxkit decompose|experiment|plan``.

Exit codes: 0 success, 1 bad input or config, 2 infeasible
decomposition (or every experiment row failed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .experiments import ConfigError, ExperimentConfig, KINDS, Sweep, run_experiment, \
    write_atomic, write_results
from .model import DimensionError, Dims, InvalidInputError, PreconditionError, load_matrix
from .solver import WaxInfeasible, plan_dimensions, wax_decompose

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2


def _dims_args(p: argparse.ArgumentParser, required_l: bool = False):
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--l", type=int, required=required_l)
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waxkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"waxkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="factor H = W A X for a given combiner")
    d.add_argument("h_file")
    d.add_argument("a_file")
    _dims_args(d, required_l=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--method", choices=("reduced", "svd"), default="reduced")
    d.add_argument("--out", help="factors / diagnostics JSON (default: stdout)")

    e = sub.add_parser("experiment", help="run a seeded sweep and write CSV")
    e.add_argument("kind", choices=KINDS)
    _dims_args(e)
    e.add_argument("--config", help="JSON file mirroring ExperimentConfig")
    e.add_argument("--seed", type=int)
    e.add_argument("--trials", type=int)
    e.add_argument("--snr-db", type=float)
    e.add_argument("--sweep", help="axis:lo:hi with axis in T, L, ones_fraction")
    e.add_argument("--budget", type=int, help="validity tests per sparse search")
    e.add_argument("--eval-budget", type=int, help="objective evaluations per refinement")
    e.add_argument("--out")

    p = sub.add_parser("plan", help="T_opt, L_opt and M_max for partial dimensions")
    _dims_args(p)
    return parser


def _emit(obj: dict, out: str | None):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def cmd_decompose(args) -> int:
    try:
        h = load_matrix(args.h_file)
        a = load_matrix(args.a_file)
        m = args.m if args.m is not None else h.shape[0]
        k = args.k if args.k is not None else h.shape[1]
        t = args.t if args.t is not None else a.shape[1]
        dims = Dims(m, k, args.l, t, args.n)
        if h.shape != (dims.M, dims.K):
            raise DimensionError(f"H is {h.shape}, dims say ({dims.M}, {dims.K})")
        if a.shape[1] != dims.T:
            raise DimensionError(f"A has {a.shape[1]} columns, dims say T={dims.T}")
        f = wax_decompose(h, a, dims, args.seed, method=args.method)
    except (OSError, InvalidInputError, DimensionError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except WaxInfeasible as exc:
        print(f"infeasible: {exc.reason}", file=sys.stderr)
        diag = {"status": "infeasible", "reason": exc.reason, "dims": dims.to_dict(),
                **{k: (v if v == v and abs(v) != float("inf") else None)
                   if isinstance(v, float) else v for k, v in exc.diagnostics.items()}}
        _emit(diag, args.out)
        return EXIT_INFEASIBLE
    print(f"residual: {f.residual:.3g}")
    _emit({"status": "ok", "dims": dims.to_dict(), **f.to_dict()}, args.out)
    return EXIT_OK


def _experiment_config(args) -> ExperimentConfig:
    base: dict = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")
    dims = dict(base.pop("dims", {}))
    for flag, key in (("m", "M"), ("k", "K"), ("l", "L"), ("t", "T"), ("n", "N")):
        v = getattr(args, flag)
        if v is not None:
            dims[key] = v
    for flag, key in (("seed", "seed"), ("trials", "trials"), ("snr_db", "snr_db"),
                      ("budget", "budget"), ("eval_budget", "eval_budget"),
                      ("out", "out_path")):
        v = getattr(args, flag)
        if v is not None:
            base[key] = v
    base["kind"] = args.kind
    if args.kind == "bound-table":
        dims.setdefault("L", 1)
    missing = [k for k in ("M", "K", "L") if k not in dims]
    if missing:
        raise ConfigError(f"missing dimensions: {missing}")
    cfg = ExperimentConfig.from_dict({**base, "dims": dims})
    if args.sweep is not None:
        cfg.sweep = Sweep.parse(args.sweep)
    return cfg


def cmd_experiment(args) -> int:
    try:
        cfg = _experiment_config(args)
        header, rows, failed = run_experiment(cfg)
    except (OSError, ConfigError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not rows:
        print("error: nothing to run", file=sys.stderr)
        return EXIT_INPUT
    write_results(cfg, header, rows, failed)
    print(f"wrote {len(rows)} rows to {cfg.out_path} ({failed} failed)")
    return EXIT_INFEASIBLE if all(r["error"] for r in rows) else EXIT_OK


def cmd_plan(args) -> int:
    try:
        plan = plan_dimensions(args.m, args.k, args.l, args.t)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = {"t_opt": plan.t_opt, "l_opt": plan.l_opt,
           "m_max": "inf" if plan.m_max == float("inf") else plan.m_max,
           "infeasible": list(plan.infeasible)}
    print(json.dumps(out))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return {"decompose": cmd_decompose, "experiment": cmd_experiment,
            "plan": cmd_plan}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
