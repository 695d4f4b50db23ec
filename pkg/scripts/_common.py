import argparse

from waxkit.experiments import ExperimentConfig, Sweep, run_experiment, write_results


def run(cfg: ExperimentConfig) -> None:
    header, rows, failed = run_experiment(cfg)
    write_results(cfg, header, rows, failed)
    print(f"{cfg.out_path}: {len(rows)} rows, {failed} failed jobs")


def base_parser(doc: str, out: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=doc)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=out)
    return p


__all__ = ["ExperimentConfig", "Sweep", "run", "base_parser"]
