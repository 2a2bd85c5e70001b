import numpy as np
import pytest

from ampsim.model import (
    BernoulliGaussianPrior,
    MatrixEnsemble,
    assemble_instance,
    noise_variance_from_snr,
    sample_matrix,
    sample_noise,
    sample_signal,
)

PRIOR = BernoulliGaussianPrior(0.1, 1.0)


def make_instance(n, delta=0.5, seed=0, ensemble=MatrixEnsemble.GAUSSIAN, snr_db=20.0):
    m = int(round(delta * n))
    x = sample_signal(n, PRIOR, seed)
    w = sample_noise(m, noise_variance_from_snr(0.1, snr_db), seed + 1)
    a = sample_matrix(m, n, ensemble, seed + 2)
    return assemble_instance(a, x, w)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
