"""AMP / IST iterations for sparse linear regression, their state evolution,
and a seeded Monte-Carlo harness for comparing the two."""

from ampsim.amp import CorrectionMode, TauSource, Trajectory, run, step
from ampsim.denoise import BgMmse, SoftThreshold, denoise, denoise_derivative, denoise_vector
from ampsim.errors import (
    ConfigError,
    DivergenceError,
    ExperimentError,
    NumericError,
    ParameterError,
    ShapeError,
)
from ampsim.model import (
    BernoulliGaussianPrior,
    MatrixEnsemble,
    ProblemInstance,
    assemble_instance,
    sample_matrix,
    sample_noise,
    sample_signal,
)
from ampsim.state_evolution import AnalyticDistribution, EmpiricalDistribution, se_run

__all__ = [
    "AnalyticDistribution",
    "BernoulliGaussianPrior",
    "BgMmse",
    "ConfigError",
    "CorrectionMode",
    "DivergenceError",
    "EmpiricalDistribution",
    "ExperimentError",
    "MatrixEnsemble",
    "NumericError",
    "ParameterError",
    "ProblemInstance",
    "ShapeError",
    "SoftThreshold",
    "TauSource",
    "Trajectory",
    "assemble_instance",
    "denoise",
    "denoise_derivative",
    "denoise_vector",
    "run",
    "sample_matrix",
    "sample_noise",
    "sample_signal",
    "se_run",
    "step",
]
