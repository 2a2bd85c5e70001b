"""The iteration

    v(t)   = y - A x(t) + mu(t)
    r(t)   = x(t) + A^T v(t)
    x(t+1) = eta_t(r(t))

started from x(0) = 0, mu(0) = 0.  IST keeps mu = 0; AMP uses the Onsager
term mu(t) = v(t-1) * sum_j eta'_{t-1}(r_j(t-1)) / m.

Trajectories are indexed so that ``mse[t]`` is the output error of x(t) and
``taur[t]`` is ||v(t)||^2 / m; both therefore start at t = 0 and line up
entry for entry with the state-evolution recursion.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from ampsim.denoise import denoise_vector
from ampsim.errors import DivergenceError, NumericError, ParameterError, ShapeError
from ampsim.model import ProblemInstance

# added to the oracle variance so a perfect reconstruction never feeds tau = 0
ORACLE_TAU_GUARD = 1e-12


class CorrectionMode(enum.Enum):
    IST = "ist"
    ONSAGER = "amp"


class TauSource(enum.Enum):
    """Where the denoiser's input-variance parameter comes from."""

    ESTIMATE = "estimate"  # ||v(t)||^2 / m
    ORACLE = "oracle"  # ||r(t) - x||^2 / n, needs the true signal
    SE = "se"  # state-evolution prediction


@dataclass
class IterateState:
    iteration: int
    estimate: np.ndarray
    correction: np.ndarray
    residual: Optional[np.ndarray] = None
    denoiser_input: Optional[np.ndarray] = None

    @classmethod
    def initial(cls, instance: ProblemInstance) -> "IterateState":
        return cls(0, np.zeros(instance.n), np.zeros(instance.m))


@dataclass(frozen=True)
class IterationRecord:
    """Diagnostics of step t: tau-hat of v(t) and the MSE of x(t+1)."""

    iteration: int
    output_mse: float
    residual_variance: float
    input_error: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class Trajectory:
    mse: np.ndarray
    taur: np.ndarray
    records: tuple = ()
    input_errors: dict = field(default_factory=dict)

    @property
    def num_iterations(self) -> int:
        return len(self.mse) - 1


def onsager_correction(residual_prev, derivative_sum: float, m: int) -> np.ndarray:
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    if not np.isfinite(derivative_sum):
        raise NumericError(f"non-finite derivative sum {derivative_sum}")
    residual_prev = np.asarray(residual_prev, dtype=np.float64)
    if not np.isfinite(residual_prev).all():
        raise NumericError("non-finite residual")
    return (derivative_sum / m) * residual_prev


def residual_variance_estimate(residual) -> float:
    """||v||^2 / m."""
    residual = np.asarray(residual, dtype=np.float64)
    if residual.size == 0:
        raise ParameterError("residual is empty")
    return float(np.dot(residual, residual) / residual.size)


def denoiser_input_error(denoiser_input, true_signal) -> np.ndarray:
    denoiser_input = np.asarray(denoiser_input, dtype=np.float64)
    true_signal = np.asarray(true_signal, dtype=np.float64)
    if denoiser_input.shape != true_signal.shape:
        raise ShapeError(f"length mismatch: {denoiser_input.shape} vs {true_signal.shape}")
    return denoiser_input - true_signal


def _output_mse(instance, estimate):
    diff = instance.signal - estimate
    return float(np.dot(diff, diff) / instance.n)


def _residual(instance, state):
    return instance.measurements - instance.matrix @ state.estimate + state.correction


def _select_tau(tau_source, instance, state, residual, denoiser_input, se_taur):
    if tau_source is TauSource.ESTIMATE:
        return residual_variance_estimate(residual)
    if tau_source is TauSource.ORACLE:
        err = denoiser_input - instance.signal
        return float(np.dot(err, err) / instance.n) + ORACLE_TAU_GUARD
    if tau_source is TauSource.SE:
        if se_taur is None or state.iteration >= len(se_taur):
            raise ParameterError(f"no state-evolution variance for iteration {state.iteration}")
        return float(se_taur[state.iteration])
    raise ParameterError(f"unknown tau source {tau_source!r}")


def step(
    instance: ProblemInstance,
    state: IterateState,
    denoiser,
    mode: CorrectionMode = CorrectionMode.ONSAGER,
    tau_source: TauSource = TauSource.ESTIMATE,
    *,
    se_taur: Optional[Sequence[float]] = None,
    record_input_error: bool = False,
):
    """Advance one iteration.

    Returns the new :class:`IterateState` (iteration t+1, with ``residual`` and
    ``denoiser_input`` holding v(t) and r(t)) and the step's
    :class:`IterationRecord`.
    """
    t = state.iteration
    with np.errstate(over="ignore", invalid="ignore"):
        residual = _residual(instance, state)
        denoiser_input = state.estimate + instance.matrix.T @ residual
        if not (np.isfinite(residual).all() and np.isfinite(denoiser_input).all()):
            raise DivergenceError(t)
        tau = _select_tau(tau_source, instance, state, residual, denoiser_input, se_taur)
        try:
            estimate, deriv_sum = denoise_vector(denoiser, denoiser_input, tau)
        except NumericError:
            raise DivergenceError(t) from None
        if mode is CorrectionMode.ONSAGER and np.isfinite(deriv_sum):
            correction = onsager_correction(residual, deriv_sum, instance.m)
        else:
            correction = np.zeros(instance.m)
        record = IterationRecord(
            iteration=t,
            output_mse=_output_mse(instance, estimate),
            residual_variance=residual_variance_estimate(residual),
            input_error=denoiser_input - instance.signal if record_input_error else None,
        )
    if not (
        np.isfinite(estimate).all()
        and np.isfinite(deriv_sum)
        and np.isfinite(correction).all()
        and np.isfinite(record.output_mse)
        and np.isfinite(record.residual_variance)
    ):
        raise DivergenceError(t)
    new_state = IterateState(t + 1, estimate, correction, residual, denoiser_input)
    return new_state, record


def run(
    instance: ProblemInstance,
    denoiser,
    mode: CorrectionMode = CorrectionMode.ONSAGER,
    tau_source: TauSource = TauSource.ESTIMATE,
    num_iterations: int = 30,
    record_input_error: bool | Iterable[int] = False,
    *,
    se_taur: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Run ``num_iterations`` denoising steps from x(0) = 0.

    ``record_input_error`` is either a flag (keep e(t) = r(t) - x at every
    step) or a collection of iteration indices.  The returned trajectory has
    ``num_iterations + 1`` entries; the final tau-hat comes from one extra
    residual evaluation.  On blow-up a :class:`DivergenceError` is raised with
    the trajectory recorded so far in ``partial``.
    """
    if int(num_iterations) != num_iterations or num_iterations < 1:
        raise ParameterError(f"num_iterations must be >= 1, got {num_iterations}")
    if isinstance(record_input_error, bool):
        wanted = set(range(num_iterations + 1)) if record_input_error else set()
    else:
        wanted = {int(t) for t in record_input_error}

    state = IterateState.initial(instance)
    mse = [_output_mse(instance, state.estimate)]
    taur = []
    records = []
    input_errors = {}

    def partial():
        return Trajectory(np.array(mse), np.array(taur), tuple(records), dict(input_errors))

    try:
        for _ in range(num_iterations):
            t = state.iteration
            state, record = step(
                instance, state, denoiser, mode, tau_source,
                se_taur=se_taur, record_input_error=t in wanted,
            )
            records.append(record)
            taur.append(record.residual_variance)
            mse.append(record.output_mse)
            if record.input_error is not None:
                input_errors[t] = record.input_error
        with np.errstate(over="ignore", invalid="ignore"):
            residual = _residual(instance, state)
            final_tau = residual_variance_estimate(residual)
        if not np.isfinite(final_tau):
            raise DivergenceError(state.iteration)
        taur.append(final_tau)
        if num_iterations in wanted:
            denoiser_input = state.estimate + instance.matrix.T @ residual
            input_errors[num_iterations] = denoiser_input - instance.signal
    except DivergenceError as exc:
        raise DivergenceError(exc.iteration, partial()) from None
    return partial()
