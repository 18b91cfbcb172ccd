"""Command-line experiment runner.

    rydfilter --preset fig4 --sweep 1..6 --trajectories 500 --out results/fig4
    rydfilter --config run.json --mode master --atoms 2
    rydfilter --preset fig3 --calibrate

Exit codes: 0 success, 2 config error, 3 propagation error, 4 calibration failed.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import PRESETS, ConfigError, RunConfig, load_preset, parse_sweep
from .master import integrate_lindblad
from .mcwf import OBSERVABLES, EnsembleResult, PropagationError, run_ensemble
from .observables import SurvivalDistribution, poisson_average

log = logging.getLogger("rydfilter")

EXIT_OK, EXIT_CONFIG, EXIT_PROPAGATION, EXIT_CALIBRATION = 0, 2, 3, 4
CSV_COLUMNS = ("t", *OBSERVABLES, "stderr_mean_n")
CALIBRATION_ATOMS = 5
CALIBRATION_TRAJECTORIES = 100
CALIBRATION_WINDOW = 0.1


def software_version() -> str:
    try:
        return metadata.version("rydfilter")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_timeseries(path: Path, result: EnsembleResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        se = result.series_stderr("mean_n")
        for k, t in enumerate(result.times):
            w.writerow([repr(float(t)), *(repr(float(x)) for x in result.mean[k]), repr(float(se[k]))])


def simulate(config: RunConfig, n: int, workers: int | None = None) -> EnsembleResult:
    sim = config.simulation(n)
    if config.mode == "master":
        return integrate_lindblad(sim)
    return run_ensemble(sim, config.trajectories, config.base_seed, workers)


def run_experiment(
    config: RunConfig, workers: int | None = None, overrides: dict | None = None
) -> dict:
    """Run every N in config.atoms, write CSV time series and summary.json, return the summary."""
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("$.out_dir", f"cannot create {out}: {exc}") from exc
    per_n = {}
    results = {}
    for n in config.atoms:
        log.info("N=%d: %s, M=%d", n, config.mode, config.trajectories)
        res = simulate(config, n, workers)
        results[n] = res
        per_n[n] = SurvivalDistribution(n, res.final_distribution, res.final_stderr)
        write_timeseries(out / f"timeseries_N{n}.csv", res)
    summary = {
        "software_version": software_version(),
        "config": config.to_dict(),
        "overrides": overrides or {},
        "resolved": {
            "rates": config.atom_rates().__dict__ | {"gamma_e_total": config.atom_rates().gamma_e_total},
            "w_max": config.w_max(),
        },
        "seeds": {
            "base_seed": config.base_seed,
            "per_N": f"base_seed + m, m in [0, {config.trajectories})",
        },
        "results": {},
    }
    for n, res in results.items():
        entry = res.to_dict()
        entry["mode"] = config.mode
        if config.geometry.mode == "sampled":
            entry["geometry"] = config.build_geometry(n).to_dict()
        summary["results"][str(n)] = entry
    covered = sorted(per_n)
    if covered == list(range(1, covered[-1] + 1)):
        summary["poisson_average"] = poisson_average(per_n, config.mean_N).to_dict()
    path = out / "summary.json"
    try:
        path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise ConfigError("$.out_dir", f"cannot write {path}: {exc}") from exc
    return summary


@dataclass
class CalibrationResult:
    best: dict
    best_p1: float
    target: float | None
    record: list = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.target is not None and abs(self.best_p1 - self.target) > CALIBRATION_WINDOW

    def to_dict(self) -> dict:
        return {
            "best": self.best,
            "best_P5_1": self.best_p1,
            "target": self.target,
            "failed": self.failed,
            "record": self.record,
        }


def calibrate_presets(
    config: RunConfig,
    grid: dict[str, list],
    target: float | None = None,
    trajectories: int = CALIBRATION_TRAJECTORIES,
    n_atoms: int = CALIBRATION_ATOMS,
    workers: int | None = None,
) -> CalibrationResult:
    """Grid search over up to three schedule fields, maximizing P_N(1) at reduced M."""
    if not 1 <= len(grid) <= 3:
        raise ConfigError("calibration.grid", "search over one to three parameters")
    record = []
    best, best_p1 = None, -1.0
    names = list(grid)
    for values in itertools.product(*(grid[k] for k in names)):
        trial = RunConfig.from_dict(config.to_dict())
        trial.schedule = {**trial.schedule, **dict(zip(names, values))}
        trial.validate()
        sim = trial.simulation(n_atoms)
        res = run_ensemble(sim, trajectories, trial.base_seed, workers)
        p1 = float(res.final_distribution[1])
        point = dict(zip(names, values))
        record.append({**point, "P_1": p1, "P_1_stderr": float(res.final_stderr[1])})
        log.info("calibration %s -> P_%d(1) = %.3f", point, n_atoms, p1)
        if p1 > best_p1:
            best, best_p1 = point, p1
    return CalibrationResult(best, best_p1, target, record)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rydfilter", description=__doc__.split("\n\n")[0])
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--atoms", type=int, help="single initial atom number N")
    p.add_argument("--sweep", help="range of N, e.g. 1..10")
    p.add_argument("--trajectories", type=int, help="trajectories per N (M)")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--mode", choices=("mcwf", "master"))
    p.add_argument("--gamma-r", type=float, help="Rydberg dephasing rate (1/us)")
    p.add_argument("--workers", type=int, help="worker processes (default: RFS_WORKERS or all cores)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--calibrate", action="store_true", help="grid-search the preset's schedule")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args) -> tuple[RunConfig, dict]:
    if args.config and args.preset:
        raise ConfigError("--config", "give either --config or --preset, not both")
    if args.config:
        cfg = RunConfig.load(args.config)
    elif args.preset:
        cfg = load_preset(args.preset)
    else:
        raise ConfigError("--config", "a config file or preset is required")
    overrides = {}
    if args.atoms is not None and args.sweep:
        raise ConfigError("--atoms", "give either --atoms or --sweep")
    if args.atoms is not None:
        overrides["atoms"] = [args.atoms]
    if args.sweep:
        overrides["atoms"] = parse_sweep(args.sweep)
    for flag, key in (("trajectories", "trajectories"), ("seed", "base_seed"), ("mode", "mode"), ("gamma_r", "gamma_r")):
        v = getattr(args, flag)
        if v is not None:
            overrides[key] = v
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    data = cfg.to_dict() | overrides
    resolved = RunConfig.from_dict(data)
    return resolved, overrides


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    try:
        cfg, overrides = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.calibrate:
            cal = cfg.calibration
            if not cal.get("grid"):
                raise ConfigError("$.calibration.grid", "no calibration grid in config")
            result = calibrate_presets(cfg, cal["grid"], cal.get("target"), workers=args.workers)
            cfg.schedule = {**cfg.schedule, **result.best}
            cfg.calibration = {**cal, "search": result.to_dict()}
            out = Path(cfg.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            name = cfg.preset or "calibrated"
            cfg.dump(out / f"{name}.json")
            print(json.dumps(result.to_dict(), indent=2))
            return EXIT_CALIBRATION if result.failed else EXIT_OK
        summary = run_experiment(cfg, args.workers, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PropagationError as exc:
        print(f"propagation error (seed {exc.seed}, t={exc.t}): {exc}", file=sys.stderr)
        return EXIT_PROPAGATION
    for n, entry in summary["results"].items():
        p = ", ".join(f"{x:.3f}" for x in entry["P_N"])
        print(f"N={n}: P_N(n) = [{p}]")
    if "poisson_average" in summary:
        pa = summary["poisson_average"]
        print(f"Poisson-averaged (mean N={pa['mean_N']}): P(n) = " + ", ".join(f"{x:.3f}" for x in pa["P"][:4]))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
