"""Experiment harness: seeded trials, result tables, CSV/JSON export.

Reproduces the two benchmark protocols: initialization accuracy (mean
relative error of GSI vs SI over a grid of N/d ratios) and recovery success
rate (GSI followed by BB-stepped gradient descent, success when the final
relative error drops below a threshold).

Determinism contract: every numeric output is a pure function of
(config, base_seed). Trial streams are derived as
SeedSequence(base_seed, spawn_key=(round(1000*ratio), trial)), so no two
trials share an RNG stream and the worker count never changes results.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .ensembles import (
    Ensemble,
    Field,
    SeedLike,
    as_rng,
    moment_profile,
    sample_measurements,
)
from .solver import BarzilaiBorwein, SolverConfig, dist, solve
from .spectral import baseline_si, gsi, measure

THREADS_ENV_VAR = "PHASEKIT_THREADS"

DEFAULT_RATIOS = tuple(range(2, 21, 2))


class ExperimentKind(Enum):
    INIT_ERROR = "init_error"
    SUCCESS_RATE = "success_rate"
    MOMENT_VERIFY = "moment_verify"
    SINGLE_SOLVE = "single_solve"


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ExperimentKind
    ensemble: Ensemble
    d: int = 128
    ratio_grid: tuple = DEFAULT_RATIOS
    trials: Optional[int] = None     # defaults: 50 for init, 100 for success
    success_threshold: float = 1e-5
    max_iters: int = 2000
    power_iters: int = 50
    base_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if len(self.ratio_grid) == 0:
            raise ValueError("ratio grid must be nonempty")
        if any(r < 1 for r in self.ratio_grid):
            raise ValueError("ratio grid values must be >= 1")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be >= 1")

    @property
    def effective_trials(self) -> int:
        if self.trials is not None:
            return self.trials
        return 100 if self.kind is ExperimentKind.SUCCESS_RATE else 50

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "ensemble": self.ensemble.to_dict(),
            "d": self.d,
            "ratio_grid": list(self.ratio_grid),
            "trials": self.effective_trials,
            "success_threshold": self.success_threshold,
            "max_iters": self.max_iters,
            "power_iters": self.power_iters,
            "base_seed": self.base_seed,
            "paired_si_gsi_measurements": True,
        }


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed_key: tuple
    init_rel_error: float
    final_rel_error: float
    iterations: int
    success: bool
    wall_time: float


@dataclass
class ResultTable:
    kind: ExperimentKind
    columns: list
    rows: list                        # list of dicts keyed by `columns`
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format_cell(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"metadata": self.metadata, "rows": self.rows}, indent=2)


def _format_cell(v) -> str:
    # 17 significant digits: exact float round trips
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def trial_seed(base_seed: int, ratio: float, trial: int) -> np.random.SeedSequence:
    """Pure function of (base_seed, ratio, trial); no two trials share a stream."""
    return np.random.SeedSequence(entropy=base_seed, spawn_key=(int(round(1000 * ratio)), trial))


def generate_signal(d: int, seed: SeedLike, spike_factor: float = 200.0,
                    field: Field = Field.REAL) -> np.ndarray:
    """Gaussian test signal with the last two coordinates amplified by
    `spike_factor`. Complex signals are (g1 + i g2)/sqrt(2)."""
    if d < 2:
        raise ValueError("need d >= 2 for the spiked signal")
    rng = as_rng(seed)
    if field is Field.COMPLEX:
        x = (rng.standard_normal(d) + 1j * rng.standard_normal(d)) / math.sqrt(2.0)
    else:
        x = rng.standard_normal(d)
    x[-2:] *= spike_factor
    return x


def _map_trials(fn: Callable[[int], object], trials: int, threads: int) -> list:
    """Run trials into pre-indexed slots; result order is independent of the
    worker count because each slot depends only on its own seed."""
    if threads <= 1:
        return [fn(i) for i in range(trials)]
    out = [None] * trials
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for i, res in zip(range(trials), pool.map(fn, range(trials))):
            out[i] = res
    return out


def run_init_experiment(config: ExperimentConfig) -> ResultTable:
    """Mean relative error of GSI and SI per N/d ratio; both initializers see
    the same measurement realizations within a trial (paired comparison)."""
    if config.kind is not ExperimentKind.INIT_ERROR:
        raise ValueError(f"config kind must be INIT_ERROR, got {config.kind}")
    profile = moment_profile(config.ensemble)
    trials = config.effective_trials

    def one_trial(ratio: float, i: int) -> tuple[float, float]:
        ss = trial_seed(config.base_seed, ratio, i)
        sig_ss, meas_ss, pw_gsi_ss, pw_si_ss = ss.spawn(4)
        x = generate_signal(config.d, sig_ss, field=config.ensemble.field)
        N = int(round(ratio * config.d))
        mset = sample_measurements(config.ensemble, N, config.d, meas_ss)
        y = measure(mset, x)
        nx = np.linalg.norm(x)
        g = gsi(mset, y, profile, power_iters=config.power_iters, seed=pw_gsi_ss)
        s = baseline_si(mset, y, power_iters=config.power_iters, seed=pw_si_ss)
        return dist(g.z0, x) / nx, dist(s.z0, x) / nx

    rows = []
    for ratio in config.ratio_grid:
        pairs = _map_trials(lambda i, r=ratio: one_trial(r, i), trials, config.threads)
        gsi_errs = [p[0] for p in pairs]
        si_errs = [p[1] for p in pairs]
        rows.append({
            "ratio": float(ratio),
            "N": int(round(ratio * config.d)),
            "gsi_mean_rel_error": float(np.mean(gsi_errs)),
            "si_mean_rel_error": float(np.mean(si_errs)),
            "trials": trials,
        })
    columns = ["ratio", "N", "gsi_mean_rel_error", "si_mean_rel_error", "trials"]
    return ResultTable(config.kind, columns, rows, config.to_dict())


def run_recovery_trial(config: ExperimentConfig, ratio: float, i: int) -> TrialRecord:
    """One seeded end-to-end trial: signal, measurements, GSI, BB descent."""
    t0 = time.perf_counter()
    ss = trial_seed(config.base_seed, ratio, i)
    sig_ss, meas_ss, pw_ss = ss.spawn(3)
    x = generate_signal(config.d, sig_ss, field=config.ensemble.field)
    N = int(round(ratio * config.d))
    profile = moment_profile(config.ensemble)
    mset = sample_measurements(config.ensemble, N, config.d, meas_ss)
    y = measure(mset, x)
    nx = np.linalg.norm(x)
    init = gsi(mset, y, profile, power_iters=config.power_iters, seed=pw_ss)
    init_err = dist(init.z0, x) / nx
    report = solve(
        mset, y, init.z0,
        SolverConfig(step_mode=BarzilaiBorwein(), max_iters=config.max_iters),
    )
    final_err = dist(report.final_z, x) / nx
    wall = time.perf_counter() - t0
    return TrialRecord(
        trial_index=i,
        seed_key=(config.base_seed, int(round(1000 * ratio)), i),
        init_rel_error=float(init_err),
        final_rel_error=float(final_err),
        iterations=report.iterations,
        success=bool(final_err < config.success_threshold),
        wall_time=wall,
    )


def run_recovery_experiment(config: ExperimentConfig) -> ResultTable:
    """Success rate per N/d ratio over seeded trials."""
    if config.kind is not ExperimentKind.SUCCESS_RATE:
        raise ValueError(f"config kind must be SUCCESS_RATE, got {config.kind}")
    moment_profile(config.ensemble)  # reject invalid ensembles up front
    trials = config.effective_trials

    rows = []
    for ratio in config.ratio_grid:
        records = _map_trials(
            lambda i, r=ratio: run_recovery_trial(config, r, i), trials, config.threads
        )
        rows.append({
            "ratio": float(ratio),
            "N": int(round(ratio * config.d)),
            "success_rate": float(np.mean([r.success for r in records])),
            "mean_init_rel_error": float(np.mean([r.init_rel_error for r in records])),
            "mean_final_rel_error": float(np.mean([r.final_rel_error for r in records])),
            "trials": trials,
        })
    columns = ["ratio", "N", "success_rate", "mean_init_rel_error",
               "mean_final_rel_error", "trials"]
    return ResultTable(config.kind, columns, rows, config.to_dict())


def export(table: ResultTable, path: str, format: str = "csv") -> None:
    """Write a result table; CSV is header-plus-rows, JSON carries the full
    config metadata for exact replay."""
    if format not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {format!r}")
    payload = table.to_csv() if format == "csv" else table.to_json()
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write results to {path!r}: {exc}") from exc


def default_threads() -> int:
    """Thread count from the environment, used only when --threads is absent."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
