"""Command-line interface.

Subcommands:
    init-bench      mean GSI/SI initialization error over an N/d grid
    recover-bench   recovery success rate over an N/d grid
    verify-moments  Monte-Carlo check of the ensemble's moment constants
    solve           one seeded end-to-end recovery

A JSON config file (--config) mirrors the experiment options; explicit flags
override file values.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bench import (
    ExperimentConfig,
    ExperimentKind,
    default_threads,
    export,
    run_init_experiment,
    run_recovery_experiment,
    run_recovery_trial,
)
from .ensembles import BUILTIN_ENTRIES, Ensemble, Field, derived_constants, moment_profile
from .verify import mc_condition_residual, mc_F_residual


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--field", choices=["real", "complex"], help="number field")
    p.add_argument("--ensemble", choices=sorted(BUILTIN_ENTRIES), help="entry distribution")
    p.add_argument("--d", type=int, help="signal dimension")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--config", help="JSON config file; flags override its values")


def _add_bench(p: argparse.ArgumentParser) -> None:
    _add_common(p)
    p.add_argument("--ratios", help="comma-separated N/d values, e.g. 2,4,6")
    p.add_argument("--trials", type=int, help="trials per ratio")
    p.add_argument("--max-iters", type=int, help="gradient iterations cap")
    p.add_argument("--power-iters", type=int, help="power-method iterations")
    p.add_argument("--threads", type=int, help="worker threads (default: "
                   "PHASEKIT_THREADS or 1); results do not depend on this")
    p.add_argument("--out", help="output file (default: print to stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasekit",
                                     description="Phase retrieval benchmarks for "
                                                 "sub-Gaussian rank-one measurements.")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_bench(sub.add_parser("init-bench", help="initialization error vs N/d"))
    _add_bench(sub.add_parser("recover-bench", help="recovery success rate vs N/d"))

    pv = sub.add_parser("verify-moments", help="Monte-Carlo moment-identity check")
    _add_common(pv)
    pv.add_argument("--samples", type=int, default=1_000_000, help="Monte-Carlo sample count")
    pv.add_argument("--out", help="write the residual report as JSON")
    pv.add_argument("--format", choices=["csv", "json"], default="json")

    ps = sub.add_parser("solve", help="single seeded recovery run")
    _add_common(ps)
    ps.add_argument("--ratios", help="N/d ratio (first value used)")
    ps.add_argument("--trials", type=int, help=argparse.SUPPRESS)
    ps.add_argument("--max-iters", type=int)
    ps.add_argument("--power-iters", type=int)
    ps.add_argument("--threads", type=int, help=argparse.SUPPRESS)
    ps.add_argument("--out", help="write the trial record as JSON")
    ps.add_argument("--format", choices=["csv", "json"], default="json")
    return parser


def _load_config_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _merge(args: argparse.Namespace, kind: ExperimentKind) -> ExperimentConfig:
    """Config file values, overridden by any explicitly given flags."""
    file_cfg = _load_config_file(args.config) if args.config else {}
    ens_cfg = file_cfg.get("ensemble", {})

    def pick(flag_value, file_key, default):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(file_key, default)

    field = args.field or ens_cfg.get("field", "real")
    entry = args.ensemble or ens_cfg.get("entry", "gaussian")
    ensemble = Ensemble.from_dict({"field": field, "entry": entry})

    ratios = getattr(args, "ratios", None)
    if ratios is not None:
        ratio_grid = tuple(float(r) for r in ratios.split(","))
    else:
        ratio_grid = tuple(file_cfg.get("ratio_grid", ExperimentConfig.ratio_grid))

    threads = getattr(args, "threads", None)
    if threads is None:
        threads = file_cfg.get("threads", default_threads())

    return ExperimentConfig(
        kind=kind,
        ensemble=ensemble,
        d=pick(args.d, "d", 128),
        ratio_grid=ratio_grid,
        trials=pick(getattr(args, "trials", None), "trials", None),
        success_threshold=file_cfg.get("success_threshold", 1e-5),
        max_iters=pick(getattr(args, "max_iters", None), "max_iters", 2000),
        power_iters=pick(getattr(args, "power_iters", None), "power_iters", 50),
        base_seed=pick(args.seed, "base_seed", 0),
        threads=threads,
    )


def _emit(args, table) -> None:
    if args.out:
        export(table, args.out, args.format)
    else:
        sys.stdout.write(table.to_csv() if args.format == "csv" else table.to_json() + "\n")


def _cmd_init_bench(args) -> int:
    table = run_init_experiment(_merge(args, ExperimentKind.INIT_ERROR))
    _emit(args, table)
    return 0


def _cmd_recover_bench(args) -> int:
    table = run_recovery_experiment(_merge(args, ExperimentKind.SUCCESS_RATE))
    _emit(args, table)
    return 0


def _cmd_verify_moments(args) -> int:
    cfg = _merge(args, ExperimentKind.MOMENT_VERIFY)
    d = args.d if args.d is not None else 3
    rng = np.random.default_rng(np.random.SeedSequence(cfg.base_seed))
    x = rng.standard_normal(d)
    if cfg.ensemble.field is Field.COMPLEX:
        x = x + 1j * rng.standard_normal(d)
    x = x / np.linalg.norm(x)

    report = mc_condition_residual(cfg.ensemble, d, x, n_samples=args.samples,
                                   seed=np.random.SeedSequence(cfg.base_seed, spawn_key=(1,)))
    reports = [report]
    if cfg.ensemble.field is Field.COMPLEX:
        reports.append(mc_F_residual(cfg.ensemble, x, n_samples=args.samples,
                                     seed=np.random.SeedSequence(cfg.base_seed, spawn_key=(2,))))
    profile = moment_profile(cfg.ensemble)
    consts = derived_constants(profile)
    payload = {
        "ensemble": cfg.ensemble.to_dict(),
        "profile": {"tau1": profile.tau1, "tau2": profile.tau2,
                    "tau3": profile.tau3, "tau4": profile.tau4},
        "constants": {"alpha": consts.alpha, "beta": consts.beta,
                      "alpha_hat": consts.alpha_hat, "epsilon0": consts.epsilon0},
        "checks": [r.to_dict() for r in reports],
        "passed": all(r.passed for r in reports),
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if payload["passed"] else 1


def _cmd_solve(args) -> int:
    cfg = _merge(args, ExperimentKind.SINGLE_SOLVE)
    ratio = cfg.ratio_grid[0]
    record = run_recovery_trial(cfg, ratio, 0)
    payload = {
        "ensemble": cfg.ensemble.to_dict(),
        "d": cfg.d,
        "N": int(round(ratio * cfg.d)),
        "base_seed": cfg.base_seed,
        "init_rel_error": record.init_rel_error,
        "final_rel_error": record.final_rel_error,
        "iterations": record.iterations,
        "success": record.success,
        "wall_time": record.wall_time,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


_COMMANDS = {
    "init-bench": _cmd_init_bench,
    "recover-bench": _cmd_recover_bench,
    "verify-moments": _cmd_verify_moments,
    "solve": _cmd_solve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
