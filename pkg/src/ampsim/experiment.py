"""Monte-Carlo harness: one fixed (x, w), T independent draws of A.

Trial k draws its matrix from stream ("matrix", k) of the master seed; the
shared signal and noise come from streams ("signal", -1) and ("noise", -1).
Workers only see immutable inputs and results are gathered in trial order,
so outputs do not depend on the worker count.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ampsim import amp
from ampsim.config import ExperimentConfig, serialize_config
from ampsim.errors import ConfigError, DivergenceError, ExperimentError
from ampsim.model import (
    assemble_instance,
    empirical_noise_second_moment,
    noise_variance_from_snr,
    sample_matrix,
    sample_noise,
    sample_signal,
    stream_seed,
)
from ampsim.state_evolution import AnalyticDistribution, EmpiricalDistribution, SeTrajectory, se_run
from ampsim.stats import (
    MIN_SURVIVING_FRACTION,
    AggregateTrajectory,
    QqSeries,
    ScalingRow,
    aggregate_trials,
    ks_distance,
    qq_series,
    scaling_rows,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrialResult:
    index: int
    trajectory: Optional[amp.Trajectory]
    diverged_at: Optional[int] = None
    # iteration -> KS distance of e(t) / sqrt(tau-hat(t)) to N(0, 1)
    ks: dict = field(default_factory=dict)
    # iteration -> standardized e(t); kept for trial 0 only
    standardized_errors: dict = field(default_factory=dict)


@dataclass(eq=False)
class ExperimentReport:
    config: ExperimentConfig
    tau_w: float
    state_evolution: SeTrajectory
    aggregate: AggregateTrajectory
    trajectories: list
    diverged_trials: list
    ks: dict  # iteration -> per-surviving-trial KS distances
    qq: dict  # iteration -> QqSeries from the first surviving trial
    timings: dict
    scaling: list = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class SharedDraws:
    signal: np.ndarray
    noise: np.ndarray
    tau_w: float


def shared_draws(config: ExperimentConfig, n: Optional[int] = None) -> SharedDraws:
    n = config.n if n is None else n
    m = config.measurements_for(n)
    signal = sample_signal(n, config.prior, stream_seed(config.seed, "signal", -1))
    variance = noise_variance_from_snr(config.sparsity_rate, config.snr_db)
    noise = sample_noise(m, variance, stream_seed(config.seed, "noise", -1))
    return SharedDraws(signal, noise, empirical_noise_second_moment(noise))


def run_trial(config: ExperimentConfig, draws: SharedDraws, index: int, se_taur=None) -> TrialResult:
    """Draw trial ``index``'s matrix and run the configured algorithm on it."""
    n, m = draws.signal.size, draws.noise.size
    matrix = sample_matrix(m, n, config.ensemble, stream_seed(config.seed, "matrix", index))
    instance = assemble_instance(matrix, draws.signal, draws.noise)
    try:
        trajectory = amp.run(
            instance,
            config.make_denoiser(),
            config.mode,
            config.tau_source,
            config.num_iterations,
            record_input_error=config.record_input_error,
            se_taur=se_taur,
        )
    except DivergenceError as exc:
        return TrialResult(index, None, diverged_at=exc.iteration)
    ks = {}
    kept = {}
    for t in config.record_input_error:
        tau_hat = trajectory.taur[t]
        if tau_hat <= 0.0:
            continue
        standardized = trajectory.input_errors[t] / math.sqrt(tau_hat)
        ks[t] = ks_distance(standardized)
        if index == 0:
            kept[t] = standardized
    # drop the bulky per-iteration error vectors before returning
    slim = amp.Trajectory(trajectory.mse, trajectory.taur, trajectory.records)
    return TrialResult(index, slim, ks=ks, standardized_errors=kept)


def default_threads() -> int:
    return os.cpu_count() or 1


def _map_trials(fn, indices, threads):
    if threads <= 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, indices))


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None) -> ExperimentReport:
    threads = default_threads() if threads is None else max(1, int(threads))
    timings = {}

    start = time.perf_counter()
    draws = shared_draws(config)
    timings["draw_shared"] = time.perf_counter() - start

    start = time.perf_counter()
    se = se_run(
        EmpiricalDistribution(draws.signal),
        draws.noise.size / draws.signal.size,
        draws.tau_w,
        config.make_denoiser(),
        config.num_iterations,
    )
    timings["state_evolution"] = time.perf_counter() - start

    se_taur = se.taur if config.tau_source is amp.TauSource.SE else None
    start = time.perf_counter()
    results = _map_trials(
        lambda k: run_trial(config, draws, k, se_taur), range(config.trials), threads
    )
    timings["trials"] = time.perf_counter() - start

    start = time.perf_counter()
    survivors = [r for r in results if r.trajectory is not None]
    diverged = [r.index for r in results if r.trajectory is None]
    if diverged:
        log.warning("%d of %d trials diverged", len(diverged), config.trials)
    if len(survivors) < MIN_SURVIVING_FRACTION * config.trials or not survivors:
        raise ExperimentError(
            f"{len(diverged)} of {config.trials} trials diverged; "
            f"at least {MIN_SURVIVING_FRACTION:.0%} must survive"
        )
    aggregate = aggregate_trials([r.trajectory for r in survivors])
    ks = {t: [r.ks[t] for r in survivors if t in r.ks] for t in config.record_input_error}
    qq = {}
    for t in config.record_input_error:
        first = next((r for r in survivors if t in r.standardized_errors), None)
        if first is not None:
            qq[t] = qq_series(first.standardized_errors[t], config.quantile_count)
    timings["aggregate"] = time.perf_counter() - start

    return ExperimentReport(
        config=config,
        tau_w=draws.tau_w,
        state_evolution=se,
        aggregate=aggregate,
        trajectories=[r.trajectory for r in survivors],
        diverged_trials=diverged,
        ks=ks,
        qq=qq,
        timings=timings,
    )


def run_sweep(config: ExperimentConfig, threads: Optional[int] = None):
    """One experiment per n in ``config.sweep_n``; returns (reports by n, scaling rows)."""
    sizes = config.sweep_n or (config.n,)
    if config.scaling_iteration > config.num_iterations:
        raise ConfigError(
            f"invalid scaling_iteration: must lie in 0..{config.num_iterations}"
        )
    reports = {n: run_experiment(config.replace(n=n), threads) for n in sizes}
    rows = scaling_rows({n: r.aggregate for n, r in reports.items()}, config.scaling_iteration)
    return reports, rows


def analytic_state_evolution(config: ExperimentConfig) -> SeTrajectory:
    """n-independent SE curve under the prior with the nominal noise variance."""
    return se_run(
        AnalyticDistribution(config.prior),
        config.delta,
        noise_variance_from_snr(config.sparsity_rate, config.snr_db),
        config.make_denoiser(),
        config.num_iterations,
    )


# ---------------------------------------------------------------- output


def _fmt(value) -> str:
    return format(float(value), ".17g")


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(cell if isinstance(cell, str) else _fmt(cell) for cell in row) for row in rows]
    return "\n".join(lines) + "\n"


def trajectory_csv(report: ExperimentReport) -> str:
    agg, se = report.aggregate, report.state_evolution
    rows = [
        (str(t), agg.mse_mean[t], agg.mse_std[t], agg.taur_mean[t], agg.taur_std[t], se.mse[t], se.taur[t])
        for t in range(agg.num_iterations + 1)
    ]
    return _csv(("t", "mse_mean", "mse_std", "taur_mean", "taur_std", "se_mse", "se_taur"), rows)


def scaling_csv(rows: list) -> str:
    return _csv(
        ("n", "T", "std_mse_sqrtn", "std_taur_sqrtn", "iteration"),
        [(str(r.n), str(r.trial_count), r.std_mse_sqrtn, r.std_taur_sqrtn, str(r.iteration)) for r in rows],
    )


def qq_csv(series: QqSeries) -> str:
    body = _csv(
        ("normal_quantile", "empirical_quantile"),
        zip(series.normal_quantiles, series.empirical_quantiles),
    )
    return body + f"# ks={_fmt(series.ks)}\n"


def se_csv(se: SeTrajectory) -> str:
    return _csv(("t", "se_mse", "se_taur"), [(str(t), se.mse[t], se.taur[t]) for t in range(len(se.mse))])


def report_dict(report: ExperimentReport) -> dict:
    cfg = report.config
    agg, se = report.aggregate, report.state_evolution
    return {
        "config_text": serialize_config(cfg),
        "seed": cfg.seed,
        "streams": {
            "signal": [cfg.seed, "signal", -1],
            "noise": [cfg.seed, "noise", -1],
            "matrix": [cfg.seed, "matrix", "0..T-1"],
        },
        "n": cfg.n,
        "m": cfg.m,
        "tau_w": report.tau_w,
        "trials": cfg.trials,
        "surviving_trials": agg.trial_count,
        "diverged_trial_count": len(report.diverged_trials),
        "diverged_trials": list(report.diverged_trials),
        "aggregate": {
            "mse_mean": agg.mse_mean.tolist(),
            "mse_std": agg.mse_std.tolist(),
            "taur_mean": agg.taur_mean.tolist(),
            "taur_std": agg.taur_std.tolist(),
        },
        "state_evolution": {"mse": se.mse.tolist(), "taur": se.taur.tolist()},
        "ks": {str(t): values for t, values in sorted(report.ks.items())},
        "qq_ks": {str(t): q.ks for t, q in sorted(report.qq.items())},
        "scaling": [vars(r) for r in report.scaling],
    }


def write_outputs(report: ExperimentReport, directory, plots: bool = False) -> list:
    """Write CSV/JSON (and optionally SVG) files; returns the written paths.

    Everything except ``timing.json`` is a function of (config, seed) only.
    """
    from ampsim import plots as svg

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "trajectory.csv": trajectory_csv(report),
        "config.cfg": serialize_config(report.config),
        "report.json": json.dumps(report_dict(report), indent=2, sort_keys=True) + "\n",
        "timing.json": json.dumps(report.timings, indent=2, sort_keys=True) + "\n",
    }
    for t, series in sorted(report.qq.items()):
        files[f"qq_t{t}.csv"] = qq_csv(series)
    if report.scaling:
        files["scaling.csv"] = scaling_csv(report.scaling)
    if plots:
        files["trajectory.svg"] = svg.trajectory_svg(report)
        for t, series in sorted(report.qq.items()):
            files[f"qq_t{t}.svg"] = svg.qq_svg(series, f"QQ, iteration {t}")
    written = []
    for name, text in files.items():
        path = out / name
        _write_text(path, text)
        written.append(path)
    return written


def write_sweep_outputs(reports: dict, rows: list, directory, plots: bool = False) -> list:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for n, report in reports.items():
        written += write_outputs(report, out / f"n{n}", plots)
    path = out / "scaling.csv"
    _write_text(path, scaling_csv(rows))
    written.append(path)
    return written
