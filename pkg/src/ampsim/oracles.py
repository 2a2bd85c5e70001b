"""Slow, independent reference computations.

Nothing here calls into the code paths it is meant to check: products are
explicit loops, the posterior mean is adaptive quadrature of Bayes' rule,
expectations are Monte Carlo.  :func:`run_verification` bundles the small
versions used by ``ampsim verify``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

LOG_2PI = math.log(2.0 * math.pi)


def naive_matvec(matrix, vector):
    rows, cols = len(matrix), len(matrix[0])
    out = [0.0] * rows
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += float(matrix[i][j]) * float(vector[j])
        out[i] = acc
    return out


def naive_rmatvec(matrix, vector):
    """A^T v with explicit loops."""
    rows, cols = len(matrix), len(matrix[0])
    out = [0.0] * cols
    for j in range(cols):
        acc = 0.0
        for i in range(rows):
            acc += float(matrix[i][j]) * float(vector[i])
        out[j] = acc
    return out


def _log_normal(x, var):
    return -0.5 * (LOG_2PI + math.log(var)) - x * x / (2.0 * var)


def posterior_mean_quadrature(sparsity_rate, active_variance, r, tau):
    """E[X | X + N(0, tau) = r] by integrating Bayes' rule numerically."""
    beta, var_x = sparsity_rate, active_variance
    if beta == 0.0:
        return 0.0
    # centre and scale the slab integrand on its peak to avoid underflow
    peak = r * var_x / (var_x + tau)
    width = math.sqrt(var_x * tau / (var_x + tau))

    def log_slab(x):
        return _log_normal(x, var_x) + _log_normal(r - x, tau)

    top = log_slab(peak)
    lo, hi = peak - 40.0 * width, peak + 40.0 * width
    opts = dict(points=[peak], limit=200, epsabs=1e-14, epsrel=1e-12)
    mass, _ = integrate.quad(lambda x: math.exp(log_slab(x) - top), lo, hi, **opts)
    first, _ = integrate.quad(lambda x: x * math.exp(log_slab(x) - top), lo, hi, **opts)
    spike = (1.0 - beta) * math.exp(_log_normal(r, tau) - top) if beta < 1.0 else 0.0
    return beta * first / (spike + beta * mass)


def central_difference(fn, r, step=1e-5):
    return (fn(r + step) - fn(r - step)) / (2.0 * step)


def soft_threshold_scalar(r, threshold):
    if r > threshold:
        return r - threshold
    if r < -threshold:
        return r + threshold
    return 0.0


def amp_step_soft_threshold(matrix, measurements, estimate, correction, alpha, onsager=True):
    """One step of the iteration for soft thresholding, written out by hand.

    Returns (v, r, tau, x_next, mu_next).
    """
    rows, cols = len(matrix), len(matrix[0])
    ax = naive_matvec(matrix, estimate)
    v = [measurements[i] - ax[i] + correction[i] for i in range(rows)]
    atv = naive_rmatvec(matrix, v)
    r = [estimate[j] + atv[j] for j in range(cols)]
    tau = 0.0
    for i in range(rows):
        tau += v[i] * v[i]
    tau /= rows
    threshold = alpha * math.sqrt(tau)
    x_next = [soft_threshold_scalar(r[j], threshold) for j in range(cols)]
    active = 0
    for j in range(cols):
        if abs(r[j]) > threshold:
            active += 1
    if onsager:
        mu_next = [v[i] * active / rows for i in range(rows)]
    else:
        mu_next = [0.0] * rows
    return v, r, tau, x_next, mu_next


def gaussian_moment(center, variance, power):
    """E[(center + Z)^power], Z ~ N(0, variance), by the binomial expansion."""
    total = 0.0
    for j in range(0, power + 1, 2):
        double_fact = 1.0
        for k in range(j - 1, 0, -2):
            double_fact *= k
        total += math.comb(power, j) * center ** (power - j) * variance ** (j / 2) * double_fact
    return total


def se_mse_monte_carlo(denoiser, dist, tau, samples, rng):
    """(mean, standard error) of (eta(X + Z) - X)^2 by simulation.

    ``dist`` is an EmpiricalDistribution (atoms drawn uniformly) or an
    AnalyticDistribution (Bernoulli-Gaussian draws).
    """
    if hasattr(dist, "atoms"):
        x = dist.atoms[rng.integers(0, dist.atoms.size, size=samples)]
    else:
        prior = dist.prior
        active = rng.random(samples) < prior.sparsity_rate
        x = np.where(active, rng.standard_normal(samples) * math.sqrt(prior.active_variance), 0.0)
    r = x + math.sqrt(tau) * rng.standard_normal(samples)
    err = (denoiser.evaluate(r, tau)[0] - x) ** 2
    return float(err.mean()), float(err.std(ddof=1) / math.sqrt(samples))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def run_verification(mc_samples=200_000, seed=12345):
    """Reduced oracle suite; returns a list of :class:`Check`."""
    from ampsim import amp
    from ampsim.denoise import BgMmse, SoftThreshold
    from ampsim.model import BernoulliGaussianPrior, assemble_instance
    from ampsim.state_evolution import EmpiricalDistribution, gauss_hermite_expectation, se_mse

    rng = np.random.default_rng(seed)
    checks = []

    a = rng.standard_normal((5, 8)) / math.sqrt(5)
    x = rng.standard_normal(8)
    w = 0.1 * rng.standard_normal(5)
    inst = assemble_instance(a, x, w)
    err = float(np.max(np.abs(inst.measurements - (np.array(naive_matvec(a, x)) + w))))
    checks.append(Check("dense product", err <= 1e-12, f"max error {err:.2e}"))

    prior = BernoulliGaussianPrior(0.1, 1.0)
    den = BgMmse(prior)
    worst = 0.0
    for tau in (0.01, 0.1, 1.0):
        for r in np.linspace(-10.0, 10.0, 41):
            got = den.evaluate(np.array([r]), tau)[0][0]
            worst = max(worst, abs(got - posterior_mean_quadrature(0.1, 1.0, r, tau)))
    checks.append(Check("MMSE posterior mean", worst <= 1e-8, f"max error {worst:.2e}"))

    st = SoftThreshold(1.14)
    state = amp.IterateState.initial(inst)
    for _ in range(3):
        ref = amp_step_soft_threshold(a, list(inst.measurements), list(state.estimate),
                                      list(state.correction), 1.14)
        state, _ = amp.step(inst, state, st, amp.CorrectionMode.ONSAGER)
        err = max(float(np.max(np.abs(state.estimate - ref[3]))),
                  float(np.max(np.abs(state.correction - ref[4]))))
        if err > 1e-12:
            break
    checks.append(Check("AMP step", err <= 1e-12, f"max error {err:.2e}"))

    gh_err = max(
        abs(gauss_hermite_expectation(lambda z, p=p: z ** p, 0.3, 0.7, 10) - gaussian_moment(0.3, 0.7, p))
        / max(1.0, abs(gaussian_moment(0.3, 0.7, p)))
        for p in range(20)
    )
    checks.append(Check("Gauss-Hermite exactness", gh_err <= 1e-10, f"max rel error {gh_err:.2e}"))

    atoms = np.where(rng.random(3000) < 0.1, rng.standard_normal(3000), 0.0)
    dist = EmpiricalDistribution(atoms)
    for name, d, tau in (("MMSE", den, 0.201), ("soft", st, 0.05)):
        mean, se = se_mse_monte_carlo(d, dist, tau, mc_samples, rng)
        value = se_mse(d, dist, tau)
        z = abs(value - mean) / se
        checks.append(Check(f"SE vs Monte Carlo ({name})", z <= 4.0, f"{z:.2f} standard errors"))
    return checks
