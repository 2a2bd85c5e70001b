"""Separable scalar denoisers and their derivatives.

A denoiser is any object with an ``evaluate(r, tau)`` method returning the
pair ``(eta(r), eta'(r))`` elementwise for an array ``r`` and an input-noise
variance ``tau``.  Two are provided: soft thresholding at ``alpha * sqrt(tau)``
and the posterior mean under a Bernoulli-Gaussian prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit

from ampsim.errors import NumericError, ParameterError
from ampsim.model import BernoulliGaussianPrior

MINIMAX_ALPHA = 1.14  # minimax soft-threshold multiplier for 0.1-sparse signals


def _check_tau(tau, allow_zero):
    if not math.isfinite(tau):
        raise NumericError(f"non-finite input variance {tau}")
    if tau < 0.0 or (tau == 0.0 and not allow_zero):
        raise ParameterError(f"input variance must be {'>=' if allow_zero else '>'} 0, got {tau}")


@dataclass(frozen=True)
class SoftThreshold:
    """eta(r) = sign(r) max(0, |r| - alpha sqrt(tau))."""

    alpha: float = MINIMAX_ALPHA

    def __post_init__(self):
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be positive, got {self.alpha}")

    def evaluate(self, r, tau):
        _check_tau(tau, allow_zero=True)
        threshold = self.alpha * math.sqrt(tau)
        mag = np.abs(r) - threshold
        out = np.sign(r) * np.maximum(mag, 0.0)
        # derivative at the kink is taken as 0
        deriv = (mag > 0.0).astype(np.float64)
        return out, deriv


@dataclass(frozen=True)
class BgMmse:
    """Posterior mean E[X | X + N(0, tau) = r] for a Bernoulli-Gaussian X.

    With s = active_variance + tau the posterior activity probability is
    pi(r) = expit(log(beta/(1-beta)) + 0.5 log(tau/s) + r^2 (1/tau - 1/s) / 2)
    and eta(r) = pi(r) r active_variance / s.  Working with the logit keeps
    the computation finite for |r|/sqrt(tau) in the thousands.
    """

    prior: BernoulliGaussianPrior = BernoulliGaussianPrior()

    def evaluate(self, r, tau):
        _check_tau(tau, allow_zero=False)
        beta = self.prior.sparsity_rate
        var_x = self.prior.active_variance
        r = np.asarray(r, dtype=np.float64)
        if beta == 0.0:
            return np.zeros_like(r), np.zeros_like(r)
        s = var_x + tau
        gain = var_x / s
        if beta == 1.0:
            return gain * r, np.full_like(r, gain)
        precision_gap = 1.0 / tau - 1.0 / s
        logit = math.log(beta / (1.0 - beta)) + 0.5 * math.log(tau / s) + 0.5 * precision_gap * r * r
        pi = expit(logit)
        out = gain * pi * r
        # d pi / dr = pi (1 - pi) r precision_gap; 1 - pi = expit(-logit) avoids cancellation
        deriv = gain * pi * (1.0 + expit(-logit) * precision_gap * r * r)
        return out, deriv


DenoiserSpec = Union[SoftThreshold, BgMmse]


def _scalar(spec, r, tau, which):
    r = float(r)
    if not math.isfinite(r):
        raise NumericError(f"non-finite denoiser input {r}")
    return float(spec.evaluate(np.array([r]), tau)[which][0])


def denoise(spec: DenoiserSpec, r: float, tau: float) -> float:
    return _scalar(spec, r, tau, 0)


def denoise_derivative(spec: DenoiserSpec, r: float, tau: float) -> float:
    return _scalar(spec, r, tau, 1)


def denoise_vector(spec: DenoiserSpec, r, tau: float):
    """Apply the denoiser elementwise.

    Returns ``(eta(r), sum_j eta'(r_j))``.
    """
    r = np.asarray(r, dtype=np.float64)
    finite = np.isfinite(r)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise NumericError(f"non-finite denoiser input at index {bad}: {r[bad]}")
    out, deriv = spec.evaluate(r, tau)
    return out, float(np.sum(deriv))
