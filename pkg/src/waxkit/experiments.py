"""Seeded experiment sweeps that write plot-ready CSV.

Every row records the parameters needed to recompute it with a single
library call. Rows are produced in sweep order regardless of how many
worker threads run them, so repeated runs give byte-identical CSV.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

from . import __version__
from .lossy import db_to_linear, rate_trial
from .model import Dims, RngSpec, sample_gaussian
from .solver import WaxInfeasible, t_opt
from .sparse import minimize_ones, valid_fraction
from .validity import ones_lower_bound, validate_combiner

KINDS = ("validate", "sparse-search", "rate-curve", "bound-table")
AXES = ("T", "L", "ones_fraction")

COLUMNS = {
    "bound-table": ["M", "K", "L", "T", "r_max", "Q", "min_ones"],
    "validate": ["M", "K", "L", "T", "ones_fraction", "trials", "valid_fraction",
                 "stderr", "seed"],
    "sparse-search": ["M", "K", "L", "T", "ones", "sum_modules", "valid", "seed",
                      "iterations"],
    "rate-curve": ["M", "K", "L", "T", "snr_db", "seed", "method", "i_lossless",
                   "i_achieved", "relative"],
}


class ConfigError(ValueError):
    pass


@dataclass
class Sweep:
    axis: str
    lo: int
    hi: int

    @classmethod
    def parse(cls, text: str) -> "Sweep":
        try:
            axis, lo, hi = text.split(":")
            return cls(axis, int(lo), int(hi))
        except ValueError as exc:
            raise ConfigError(f"sweep must look like axis:lo:hi, got {text!r}") from exc

    def values(self) -> list[int]:
        return list(range(self.lo, self.hi + 1))


@dataclass
class ExperimentConfig:
    kind: str
    M: int
    K: int
    L: int
    T: int | None = None
    N: int | None = None
    seed: int = 0
    trials: int = 1
    snr_db: float = 10.0
    sweep: Sweep | None = None
    out_path: str = "results.csv"
    budget: int = 4000
    eval_budget: int = 2000
    ones_fraction: float | None = None

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}")
        for name in ("M", "K", "L"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.sweep is not None:
            if self.sweep.axis not in AXES:
                raise ConfigError(f"sweep axis must be one of {AXES}")
            if not self.sweep.values():
                raise ConfigError("empty sweep range")
            if self.sweep.lo < 1:
                raise ConfigError("sweep values must be positive")
            if self.sweep.axis == "ones_fraction" and self.sweep.hi > 100:
                raise ConfigError("ones_fraction is given in percent (1..100)")

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        dims = obj.pop("dims", {})
        sweep = obj.pop("sweep", None)
        if isinstance(sweep, str):
            sweep = Sweep.parse(sweep)
        elif isinstance(sweep, dict):
            sweep = Sweep(**sweep)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**dims, **obj, sweep=sweep)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = {k: d.pop(k) for k in ("M", "K", "L", "T", "N")}
        return d


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _points(cfg: ExperimentConfig) -> list[dict]:
    """Sweep coordinates as dicts of overridden parameters."""
    if cfg.sweep is None:
        return [{}]
    return [{cfg.sweep.axis: v} for v in cfg.sweep.values()]


def _dims(cfg: ExperimentConfig, point: dict) -> Dims:
    L = point.get("L", cfg.L)
    T = point.get("T", cfg.T)
    if T is None:
        T = t_opt(cfg.M, cfg.K, L)
    return Dims(cfg.M, cfg.K, L, T)


# -- row producers -----------------------------------------------------------

def _bound_rows(cfg: ExperimentConfig):
    jobs = []
    for k in range(1, cfg.K + 1):
        for l in range(1, k + 1):
            if cfg.M % l:
                continue
            t = t_opt(cfg.M, k, l)

            def job(k=k, l=l, t=t):
                b = ones_lower_bound(cfg.M, k, l, t)
                return [dict(M=cfg.M, K=k, L=l, T=t, r_max=b.r_max if b.r_max is not None
                             else "inf", Q=b.Q, min_ones=b.min_ones)]
            jobs.append(((k, l), job, dict(M=cfg.M, K=k, L=l, T=t)))
    return jobs


def _validate_rows(cfg: ExperimentConfig):
    jobs = []
    for i, point in enumerate(_points(cfg)):
        def job(point=point, i=i):
            dims = _dims(cfg, point)
            rng = RngSpec(cfg.seed, i)
            frac = point.get("ones_fraction")
            if frac is None and cfg.ones_fraction is not None:
                frac = 100 * cfg.ones_fraction
            if frac is None:
                hits = sum(validate_combiner(sample_gaussian(rng.child(t, 0), dims.M, dims.T),
                                             dims, rng.child(t, 1)).valid
                           for t in range(cfg.trials))
                p = hits / cfg.trials
                se = (p * (1 - p) / cfg.trials) ** 0.5
                label = "gaussian"
            else:
                p, se = valid_fraction(dims, frac / 100, cfg.trials, rng)
                label = frac
            return [dict(M=dims.M, K=dims.K, L=dims.L, T=dims.T, ones_fraction=label,
                         trials=cfg.trials, valid_fraction=float(p), stderr=float(se),
                         seed=cfg.seed)]
        jobs.append(((i,), job, dict(M=cfg.M, K=cfg.K, L=point.get("L", cfg.L),
                                      T=point.get("T", cfg.T), seed=cfg.seed)))
    return jobs


def _sparse_rows(cfg: ExperimentConfig):
    jobs = []
    for i, point in enumerate(_points(cfg)):
        for trial in range(cfg.trials):
            seed = cfg.seed + trial

            def job(point=point, seed=seed):
                dims = _dims(cfg, point)
                res = minimize_ones(dims, seed, budget=cfg.budget)
                return [res.to_row(dims, seed)]
            jobs.append(((i, trial), job, dict(M=cfg.M, K=cfg.K, L=point.get("L", cfg.L),
                                                T=point.get("T", cfg.T), seed=seed)))
    return jobs


def _rate_rows(cfg: ExperimentConfig):
    jobs = []
    snr = db_to_linear(cfg.snr_db)
    for i, point in enumerate(_points(cfg)):
        for trial in range(cfg.trials):
            seed = cfg.seed + trial

            def job(point=point, seed=seed):
                dims = _dims(cfg, point)
                rows = []
                for rep in rate_trial(dims, snr, seed, cfg.eval_budget):
                    rows.append(dict(M=dims.M, K=dims.K, L=dims.L, T=dims.T,
                                     snr_db=float(cfg.snr_db), seed=seed, method=rep.method,
                                     i_lossless=rep.i_lossless, i_achieved=rep.i_achieved,
                                     relative=rep.relative))
                return rows
            jobs.append(((i, trial), job, dict(M=cfg.M, K=cfg.K, L=point.get("L", cfg.L),
                                                T=point.get("T", cfg.T), snr_db=cfg.snr_db,
                                                seed=seed)))
    return jobs


PRODUCERS = {
    "bound-table": _bound_rows,
    "validate": _validate_rows,
    "sparse-search": _sparse_rows,
    "rate-curve": _rate_rows,
}


def thread_count() -> int:
    env = os.environ.get("WAXKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def run_experiment(cfg: ExperimentConfig) -> tuple[list[str], list[dict], int]:
    """Run all jobs; returns (header, rows, failed_job_count)."""
    cfg.validate()
    jobs = PRODUCERS[cfg.kind](cfg)
    header = COLUMNS[cfg.kind] + ["error"]

    def run(item):
        _, job, stub = item
        try:
            return [dict(r, error="") for r in job()], False
        except (WaxInfeasible, ValueError, RuntimeError, ArithmeticError) as exc:
            return [dict(stub, error=f"{type(exc).__name__}: {exc}")], True

    n = thread_count()
    if n > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    rows = [r for rs, _ in results for r in rs]
    failed = sum(bad for _, bad in results)
    return header, rows, failed


def csv_text(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in header])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_results(cfg: ExperimentConfig, header, rows, failed: int) -> None:
    write_atomic(cfg.out_path, csv_text(header, rows))
    meta = {
        "config": cfg.to_dict(),
        "waxkit_version": __version__,
        "rows": len(rows),
        "failed_jobs": failed,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    write_atomic(cfg.out_path + ".json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
