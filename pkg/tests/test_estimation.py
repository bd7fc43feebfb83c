import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mrwvol.estimation import (
    RangeSeries,
    VariogramEstimate,
    block_ranges,
    empirical_variogram,
    fit_loglinear,
    log_ranges,
    variogram_of_logs,
)
from mrwvol.simulation import MrwParams, MrwPath, simulate_returns

P = MrwParams(1.0, 0.02, 64.0, 1 / 16)


def _path(cum):
    cum = np.asarray(cum, dtype=float)
    return MrwPath(np.diff(np.concatenate([[0.0], cum])), cum, P)


def test_monotone_block_range_is_last_minus_first():
    cum = np.arange(1, 33, dtype=float)
    r = log_ranges(_path(cum), 16)
    assert len(r) == 2
    # block 0 runs from the starting 0 to cum[15]; block 1 from cum[15] to cum[31]
    np.testing.assert_array_equal(r.values, [16.0, 16.0])


def test_constant_path_rejected():
    with pytest.raises(ValueError):
        log_ranges(_path(np.zeros(64)), 16)


def test_zero_range_blocks_are_dropped_and_counted():
    cum = np.concatenate([np.linspace(0.1, 1, 16), np.ones(16), np.linspace(1.5, 2, 16)])
    r = log_ranges(_path(cum), 16)
    assert r.dropped == 1
    np.testing.assert_allclose(r.values, [1.0, 1.0])
    cum = np.concatenate([np.zeros(16), np.linspace(0.1, 1, 16)])
    r = log_ranges(_path(cum), 16)
    assert r.dropped == 1 and len(r) == 1


def test_log_ranges_preconditions():
    with pytest.raises(ValueError):
        log_ranges(_path(np.arange(10.0)), 16)
    with pytest.raises(ValueError):
        log_ranges(_path(np.arange(10.0)), 1)
    with pytest.raises(ValueError):
        RangeSeries(np.array([1.0, 0.0]), 1.0)


def test_block_ranges_batch_matches_rows():
    rng = np.random.default_rng(0)
    y = rng.standard_normal((3, 64)).cumsum(axis=1)
    batch = block_ranges(y, 16)
    for i in range(3):
        np.testing.assert_array_equal(batch[i], block_ranges(y[i], 16)[0])


def test_variogram_constant_and_alternating():
    flat = empirical_variogram(RangeSeries(np.full(20, 3.0), 1.0), 5)
    np.testing.assert_array_equal(flat.values, 0.0)
    a, b = 2.0, 5.0
    alt = empirical_variogram(RangeSeries(np.array([a, b] * 10), 1.0), 4)
    assert alt.values[0] == pytest.approx(math.log(a / b) ** 2)
    assert alt.values[1] == 0.0
    np.testing.assert_array_equal(alt.lags, [1, 2, 3, 4])
    np.testing.assert_array_equal(alt.pair_counts, [19, 18, 17, 16])


def test_variogram_max_lag_check():
    with pytest.raises(ValueError):
        empirical_variogram(RangeSeries(np.ones(5) * 2, 1.0), 5)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 100.0), min_size=8, max_size=40), st.floats(0.01, 100.0))
def test_variogram_scale_and_reversal_invariance(vals, c):
    r = np.array(vals)
    base = empirical_variogram(RangeSeries(r, 1.0), 5).values
    # ln(c a) - ln(c b) == ln a - ln b only up to rounding
    np.testing.assert_allclose(empirical_variogram(RangeSeries(r * c, 1.0), 5).values, base, atol=1e-12)
    np.testing.assert_allclose(empirical_variogram(RangeSeries(r[::-1], 1.0), 5).values, base, rtol=1e-12, atol=1e-15)


def _synthetic(values, lags=None):
    lags = np.arange(1, 51) if lags is None else lags
    return VariogramEstimate(lags, np.asarray(values), np.ones_like(lags))


def test_fit_exact_line():
    lags = np.arange(1, 51)
    fit = fit_loglinear(_synthetic(0.29 + 0.04 * np.log(lags)))
    assert fit.lambda2_hat == pytest.approx(0.02, abs=1e-14)
    assert fit.intercept_hat == pytest.approx(0.29, abs=1e-14)
    assert fit.residual_rms < 1e-14
    assert fit.lag_window == (1, 50)


def test_fit_constant_and_window():
    assert fit_loglinear(_synthetic(np.full(50, 0.7))).lambda2_hat == pytest.approx(0.0, abs=1e-14)
    lags = np.arange(1, 51)
    v = 0.3 + 0.04 * np.log(lags)
    v[30:] = 99.0  # outside the window below
    assert fit_loglinear(_synthetic(v), 1, 30).lambda2_hat == pytest.approx(0.02, abs=1e-13)
    with pytest.raises(ValueError):
        fit_loglinear(_synthetic(v), 5, 6)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.lists(st.floats(0, 1), min_size=20, max_size=20))
def test_fit_shift_equivariance(delta, vals):
    v = np.array(vals)
    lags = np.arange(1, 21)
    a = fit_loglinear(_synthetic(v, lags), 1, 20)
    b = fit_loglinear(_synthetic(v + delta, lags), 1, 20)
    assert b.intercept_hat == pytest.approx(a.intercept_hat + delta, abs=1e-10)
    assert b.lambda2_hat == pytest.approx(a.lambda2_hat, abs=1e-10)


def test_variogram_of_logs_batches():
    x = np.random.default_rng(1).standard_normal((4, 100))
    lags, vals, counts = variogram_of_logs(x, 3)
    assert vals.shape == (4, 3)
    assert vals[2, 1] == pytest.approx(np.mean((x[2, 2:] - x[2, :-2]) ** 2))


def _doubling_experiment(n_paths=40):
    p = MrwParams(1.0, 0.02, 2048.0, 1 / 32)
    y = np.cumsum(simulate_returns(p, 1512 * 32, n_paths, seed=1), axis=1)
    fine = block_ranges(y, 32)
    coarse = block_ranges(y[:, 1::2], 16)
    fit = lambda r: np.array([fit_loglinear(VariogramEstimate(*variogram_of_logs(np.log(row), 50))).lambda2_hat
                              for row in r])
    return fine, coarse, fit(fine), fit(coarse)


def test_sixteen_substeps_resolution():
    fine, coarse, l_fine, l_coarse = _doubling_experiment()
    # sampled ranges sit a few percent below the finer grid's ranges...
    ratio = np.mean(coarse / fine)
    assert 0.90 < ratio < 0.97
    # ...but the bias is close to a constant factor, which the log differences remove
    assert abs(np.mean(l_coarse - l_fine)) < 0.03 * 0.02
