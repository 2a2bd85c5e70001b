"""Signal, matrix and noise generation for the linear model y = A x + w.

All samplers are pure functions of their parameters and a seed.  A seed may
be an int or a :class:`numpy.random.SeedSequence`; :func:`stream_seed` builds
the per-(trial, stream) sequences used by the experiment runner so that every
trial draws from an isolated Philox stream.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ampsim.errors import ParameterError, ShapeError

# spawn_key[0] for each named stream; never renumber, outputs depend on it
STREAM_TAGS = {"signal": 1, "noise": 2, "matrix": 3}


def stream_seed(master: int, tag: str, trial: int) -> np.random.SeedSequence:
    """Seed for stream ``tag`` of trial ``trial`` (trial -1 = shared draws)."""
    if trial < -1:
        raise ParameterError(f"trial index must be >= -1, got {trial}")
    return np.random.SeedSequence(int(master), spawn_key=(STREAM_TAGS[tag], trial + 1))


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class BernoulliGaussianPrior:
    """p(x) = (1 - beta) delta_0(x) + beta N(x; 0, active_variance)."""

    sparsity_rate: float = 0.1
    active_variance: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.sparsity_rate <= 1.0):
            raise ParameterError(f"sparsity_rate must lie in [0, 1], got {self.sparsity_rate}")
        if not (self.active_variance > 0.0 and math.isfinite(self.active_variance)):
            raise ParameterError(f"active_variance must be positive, got {self.active_variance}")

    @property
    def second_moment(self) -> float:
        return self.sparsity_rate * self.active_variance


class MatrixEnsemble(enum.Enum):
    """i.i.d. entry laws, both with E[a_ij^2] = 1/m."""

    SIGN_BERNOULLI = "sign_bernoulli"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    matrix: np.ndarray
    signal: np.ndarray
    noise: np.ndarray
    measurements: np.ndarray

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def sampling_ratio(self) -> float:
        return self.m / self.n


def _check_count(name, value):
    if int(value) != value or value < 1:
        raise ParameterError(f"{name} must be a positive integer, got {value}")


def sample_signal(n: int, prior: BernoulliGaussianPrior, seed) -> np.ndarray:
    """Draw n i.i.d. Bernoulli-Gaussian entries."""
    _check_count("n", n)
    rng = _generator(seed)
    active = rng.random(n) < prior.sparsity_rate
    values = rng.standard_normal(n) * math.sqrt(prior.active_variance)
    return np.where(active, values, 0.0)


def sample_matrix(m: int, n: int, ensemble: MatrixEnsemble | str, seed) -> np.ndarray:
    _check_count("m", m)
    _check_count("n", n)
    try:
        ensemble = MatrixEnsemble(ensemble)
    except ValueError:
        raise ParameterError(f"unknown ensemble {ensemble!r}") from None
    rng = _generator(seed)
    scale = 1.0 / math.sqrt(m)
    if ensemble is MatrixEnsemble.SIGN_BERNOULLI:
        signs = rng.integers(0, 2, size=(m, n), dtype=np.int8)
        return np.where(signs == 1, scale, -scale)
    if ensemble is MatrixEnsemble.GAUSSIAN:
        return rng.standard_normal((m, n)) * scale
    raise ParameterError(f"unknown ensemble {ensemble!r}")


def noise_variance_from_snr(beta: float, snr_db: float) -> float:
    """Noise variance giving E||Ax||^2 / E||w||^2 = snr_db for unit-variance actives."""
    if not (0.0 < beta <= 1.0):
        raise ParameterError(f"beta must lie in (0, 1] for a defined SNR, got {beta}")
    return beta * 10.0 ** (-snr_db / 10.0)


def sample_noise(m: int, variance: float, seed) -> np.ndarray:
    _check_count("m", m)
    if not (variance >= 0.0 and math.isfinite(variance)):
        raise ParameterError(f"noise variance must be non-negative, got {variance}")
    rng = _generator(seed)
    draws = rng.standard_normal(m)
    if variance == 0.0:
        return np.zeros(m)
    return draws * math.sqrt(variance)


def assemble_instance(matrix, signal, noise) -> ProblemInstance:
    matrix = np.array(matrix, dtype=np.float64)
    signal = np.array(signal, dtype=np.float64)
    noise = np.array(noise, dtype=np.float64)
    if matrix.ndim != 2 or signal.ndim != 1 or noise.ndim != 1:
        raise ShapeError("expected a 2-D matrix and 1-D signal and noise vectors")
    m, n = matrix.shape
    if signal.shape[0] != n or noise.shape[0] != m:
        raise ShapeError(
            f"matrix is {m}x{n} but signal has length {signal.shape[0]} "
            f"and noise has length {noise.shape[0]}"
        )
    if m < 1 or n < 1:
        raise ShapeError("empty problem")
    measurements = matrix @ signal + noise
    for arr in (matrix, signal, noise, measurements):
        arr.setflags(write=False)
    return ProblemInstance(matrix, signal, noise, measurements)


def empirical_noise_second_moment(noise) -> float:
    """(1/m) sum_i w_i^2."""
    noise = np.asarray(noise, dtype=np.float64)
    if noise.size == 0:
        raise ParameterError("noise vector is empty")
    return float(np.dot(noise, noise) / noise.size)
