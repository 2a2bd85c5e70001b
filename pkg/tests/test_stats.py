import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps
from scipy.special import ndtri

from ampsim.errors import NumericError, ParameterError, ShapeError
from ampsim.stats import (
    AggregateTrajectory,
    aggregate_trials,
    ks_distance,
    plotting_positions,
    qq_series,
    scaling_rows,
)


def traj(mse, taur=None):
    mse = np.asarray(mse, dtype=float)
    return SimpleNamespace(mse=mse, taur=mse * 2 if taur is None else np.asarray(taur, dtype=float))


def test_single_trial():
    agg = aggregate_trials([traj([0.1, 0.05, 0.01])])
    np.testing.assert_array_equal(agg.mse_mean, [0.1, 0.05, 0.01])
    np.testing.assert_array_equal(agg.mse_std, np.zeros(3))
    assert agg.trial_count == 1


def test_two_trials():
    agg = aggregate_trials([traj([1.0, 0.0]), traj([3.0, 0.0])])
    assert agg.mse_mean[0] == 2.0
    assert agg.mse_std[0] == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert agg.taur_std[0] == pytest.approx(2 * math.sqrt(2.0), rel=1e-15)


def test_matches_two_pass_loop(rng):
    data = rng.standard_normal((10, 6))
    agg = aggregate_trials([traj(row, row**2) for row in data])
    for t in range(6):
        values = [row[t] for row in data]
        mean = sum(values) / 10
        var = sum((v - mean) ** 2 for v in values) / 9
        assert agg.mse_mean[t] == pytest.approx(mean, abs=1e-12)
        assert agg.mse_std[t] == pytest.approx(math.sqrt(var), abs=1e-12)


def test_ragged_and_empty():
    with pytest.raises(ShapeError):
        aggregate_trials([traj([1.0, 2.0]), traj([1.0])])
    with pytest.raises(ParameterError):
        aggregate_trials([])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
def test_aggregate_permutation_invariant(seed, count):
    rng = np.random.default_rng(seed)
    trajs = [traj(rng.standard_normal(5)) for _ in range(count)]
    a = aggregate_trials(trajs)
    b = aggregate_trials([trajs[i] for i in rng.permutation(count)])
    np.testing.assert_allclose(b.mse_mean, a.mse_mean, rtol=1e-14, atol=1e-15)
    np.testing.assert_allclose(b.mse_std, a.mse_std, rtol=1e-12, atol=1e-15)


def _agg(std_mse, std_taur, trials=100, length=31):
    return AggregateTrajectory(
        np.zeros(length), np.full(length, std_mse), np.zeros(length), np.full(length, std_taur), trials
    )


def test_scaling_rows():
    rows = scaling_rows({10_000: _agg(0.0010, 0.002), 1: _agg(0.5, 0.25)}, 29)
    assert [r.n for r in rows] == [1, 10_000]
    assert rows[0].std_mse_sqrtn == 0.5 and rows[0].std_taur_sqrtn == 0.25
    assert rows[1].std_mse_sqrtn == pytest.approx(0.10, rel=1e-12)
    assert rows[1].trial_count == 100 and rows[1].iteration == 29
    with pytest.raises(ParameterError):
        scaling_rows({100: _agg(0.1, 0.1, length=10)}, 29)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 1.0), st.integers(1, 10**6))
def test_scaling_row_inverts(std, n):
    row = scaling_rows({n: _agg(std, std)}, 0)[0]
    assert row.std_mse_sqrtn / math.sqrt(n) == pytest.approx(std, rel=1e-15)


def test_qq_of_exact_quantiles_lies_on_diagonal():
    grid = ndtri(plotting_positions(300))
    series = qq_series(grid, 300)
    assert np.max(np.abs(series.empirical_quantiles - series.normal_quantiles)) <= 1e-9


def test_qq_scaling_homogeneity(rng):
    sample = rng.standard_normal(1000)
    a = qq_series(sample, 100)
    b = qq_series(2.0 * sample, 100)
    np.testing.assert_array_equal(b.normal_quantiles, a.normal_quantiles)
    np.testing.assert_allclose(b.empirical_quantiles, 2.0 * a.empirical_quantiles, rtol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(-5, 5))
def test_qq_monotone_and_affine(seed, scale, shift):
    sample = np.random.default_rng(seed).standard_normal(400)
    a = qq_series(sample, 50)
    b = qq_series(scale * sample + shift, 50)
    assert np.all(np.diff(a.normal_quantiles) > 0)
    assert np.all(np.diff(a.empirical_quantiles) >= 0)
    np.testing.assert_allclose(b.empirical_quantiles, scale * a.empirical_quantiles + shift, rtol=1e-12, atol=1e-12)


def test_qq_validation():
    with pytest.raises(NumericError):
        qq_series(np.ones(20), 10)
    with pytest.raises(ParameterError):
        qq_series(np.arange(5.0), 10)
    with pytest.raises(ParameterError):
        qq_series(np.arange(5.0), 1)


def test_ks_matches_scipy(rng):
    for size in (10, 300, 3000):
        sample = rng.standard_normal(size) * 1.1 + 0.05
        assert ks_distance(sample) == pytest.approx(sps.kstest(sample, "norm").statistic, abs=1e-14)


def test_ks_of_gaussian_sample_is_small(rng):
    assert ks_distance(rng.standard_normal(3000)) <= 0.03
    assert ks_distance(rng.standard_exponential(3000) - 1.0) > 0.05
