import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spmrf.diagnostics import (DegenerateChainWarning, ess, essps, quantiles, rhat, split_chains,
                               summarize_draws)


def test_rhat_iid(rng):
    assert rhat(rng.normal(size=(2, 5000))) < 1.01


def test_rhat_stuck_chains():
    assert rhat(np.vstack([np.zeros(100), np.ones(100)])) > 10


def test_rhat_trend_within_chain(rng):
    x = np.linspace(0, 10, 1000) + rng.normal(size=1000)
    assert rhat(x) > 1.1


def test_rhat_constant_warns():
    with pytest.warns(DegenerateChainWarning):
        assert rhat(np.ones((2, 50))) == 1.0


def test_ess_iid(rng):
    n = 4000
    assert abs(ess(rng.normal(size=n)) / n - 1) < 0.2


def test_ess_ar1(rng):
    n, phi = 20000, 0.9
    e = rng.normal(size=n)
    x = np.empty(n)
    x[0] = e[0]
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    ratio = ess(x) / n
    target = (1 - phi) / (1 + phi)
    assert abs(ratio / target - 1) < 0.3


def test_ess_degenerate():
    with pytest.warns(DegenerateChainWarning):
        assert np.isnan(ess(np.zeros((2, 40))))


def test_split_chains_odd():
    s = split_chains(np.arange(7.0))
    np.testing.assert_array_equal(s, [[0, 1, 2], [4, 5, 6]])


@given(st.floats(-100, 100), st.floats(0.01, 100))
def test_affine_invariance(a, b):
    x = np.random.default_rng(5).normal(size=(3, 200)).cumsum(axis=1)
    assert rhat(a + b * x) == pytest.approx(rhat(x), rel=1e-8)
    assert ess(a + b * x) == pytest.approx(ess(x), rel=1e-8)


def test_quantiles_and_essps():
    assert quantiles([1, 2, 3, 4, 5])[1] == 3
    assert essps(2000, 100) == 20
    assert np.isnan(essps(10, 0))


def test_too_short():
    with pytest.raises(ValueError):
        ess(np.arange(6.0))
    with pytest.raises(ValueError):
        rhat([1.0, 2.0])


def test_summarize_draws(rng):
    th = rng.normal(size=(4, 100, 3))
    s = summarize_draws(th, {"gamma": rng.exponential(size=(4, 100))}, sample_cpu=2.0)
    assert s.names == ["theta[1]", "theta[2]", "theta[3]", "gamma"]
    assert s.max_rhat < 1.05 and s.min_ess > 200
    assert s.mean_essps == pytest.approx(np.mean(s.ess) / 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        summarize_draws(np.zeros((2, 20, 2)))
