"""Trial aggregation, 1/sqrt(n) scaling rows and QQ / KS diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from ampsim.errors import NumericError, ParameterError, ShapeError

# aggregation refuses to proceed when fewer trials than this survive
MIN_SURVIVING_FRACTION = 0.5


@dataclass(frozen=True, eq=False)
class AggregateTrajectory:
    mse_mean: np.ndarray
    mse_std: np.ndarray
    taur_mean: np.ndarray
    taur_std: np.ndarray
    trial_count: int

    @property
    def num_iterations(self) -> int:
        return len(self.mse_mean) - 1


def _mean_std(stack):
    mean = stack.mean(axis=0)
    if stack.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, stack.std(axis=0, ddof=1)


def aggregate_trials(trajectories: Sequence) -> AggregateTrajectory:
    """Per-iteration mean and sample standard deviation (divisor T - 1).

    Trajectories need ``mse`` and ``taur`` arrays of a common length.  Diverged
    trials must be dropped before calling this.
    """
    if len(trajectories) == 0:
        raise ParameterError("need at least one trajectory")
    lengths = {len(t.mse) for t in trajectories} | {len(t.taur) for t in trajectories}
    if len(lengths) != 1:
        raise ShapeError(f"ragged trajectories: lengths {sorted(lengths)}")
    mse = np.stack([np.asarray(t.mse, dtype=np.float64) for t in trajectories])
    taur = np.stack([np.asarray(t.taur, dtype=np.float64) for t in trajectories])
    mse_mean, mse_std = _mean_std(mse)
    taur_mean, taur_std = _mean_std(taur)
    return AggregateTrajectory(mse_mean, mse_std, taur_mean, taur_std, len(trajectories))


@dataclass(frozen=True)
class ScalingRow:
    n: int
    trial_count: int
    std_mse_sqrtn: float
    std_taur_sqrtn: float
    iteration: int


def scaling_rows(aggregates: Mapping[int, AggregateTrajectory], iteration: int = 29) -> list[ScalingRow]:
    """std(.) * sqrt(n) at one iteration, one row per n in ascending order."""
    rows = []
    for n in sorted(aggregates):
        agg = aggregates[n]
        if not 0 <= iteration <= agg.num_iterations:
            raise ParameterError(f"iteration {iteration} not recorded for n={n}")
        root_n = math.sqrt(n)
        rows.append(ScalingRow(
            n=int(n),
            trial_count=agg.trial_count,
            std_mse_sqrtn=float(agg.mse_std[iteration] * root_n),
            std_taur_sqrtn=float(agg.taur_std[iteration] * root_n),
            iteration=iteration,
        ))
    return rows


@dataclass(frozen=True, eq=False)
class QqSeries:
    normal_quantiles: np.ndarray
    empirical_quantiles: np.ndarray
    ks: float


def plotting_positions(count: int) -> np.ndarray:
    return (np.arange(1, count + 1) - 0.5) / count


def ks_distance(sample) -> float:
    """sup_x |F_n(x) - Phi(x)| evaluated at the sample points."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    size = x.size
    if size == 0:
        raise ParameterError("empty sample")
    cdf = ndtr(x)
    above = np.arange(1, size + 1) / size - cdf
    below = cdf - np.arange(size) / size
    return float(max(above.max(), below.max()))


def qq_series(sample, quantile_count: int) -> QqSeries:
    """Standard-normal vs sample quantiles at p_k = (k - 0.5) / K.

    Sample quantiles interpolate linearly between order statistics placed at
    the same plotting positions, so a sample of exactly K points maps its
    k-th order statistic to p_k.  The caller standardizes the sample.
    """
    sample = np.asarray(sample, dtype=np.float64).ravel()
    if quantile_count < 2 or sample.size < quantile_count:
        raise ParameterError(
            f"need sample length >= quantile_count >= 2, got {sample.size} and {quantile_count}"
        )
    if not np.isfinite(sample).all():
        raise NumericError("sample contains non-finite values")
    if np.ptp(sample) == 0.0:
        raise NumericError("sample is constant")
    probs = plotting_positions(quantile_count)
    empirical = np.quantile(sample, probs, method="hazen")
    return QqSeries(ndtri(probs), empirical, ks_distance(sample))
