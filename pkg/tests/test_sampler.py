import numpy as np
import pytest
from scipy import stats

from spmrf.diagnostics import ess
from spmrf.model import _half_cauchy_product
from spmrf.sampler import (NUTS, CompiledNUTS, SamplerConfig, SamplerError, chain_rng, collect,
                           init_state, run_chain, sample, warmup_windows)
from targets import DiagGaussian, conjugate_gmrf

FAST = dict(chains=2, warmup=300, iters=2000, thin=1)


@pytest.mark.parametrize("backend", ["compiled", "python"])
def test_one_dimensional_normal_ks(backend):
    t = DiagGaussian([1.0], [2.0])
    res = sample(t, SamplerConfig(**FAST, backend=backend, seed=3))
    x = np.concatenate([r.draws[::5, 0] for r in res])
    assert stats.kstest(x, stats.norm(1.0, 2.0).cdf).pvalue > 1e-3


@pytest.mark.parametrize("backend", ["compiled", "python"])
def test_energy_error_is_second_order(backend):
    t = DiagGaussian(np.zeros(5), [1.0, 2.0, 0.5, 1.5, 3.0])
    rng = np.random.default_rng(0)
    if backend == "compiled":
        fn, data = t.compiled()
        kern = CompiledNUTS(fn, data, t.dim)
    else:
        kern = NUTS(t, rng)
    x0 = rng.normal(size=5)
    p0 = rng.normal(size=5)
    lp0, g0 = t.logp_grad(x0)
    h0 = -lp0 + 0.5 * p0 @ p0

    def energy_error(eps, steps):
        x, p, g = x0, p0, g0
        for _ in range(steps):
            x, p, g, lp = kern.leapfrog(x, p, g, eps)
        return abs(-lp + 0.5 * p @ p - h0)

    ratio = energy_error(0.1, 10) / energy_error(0.01, 100)
    assert 50 <= ratio <= 200


def test_half_cauchy_construction():
    rng = np.random.default_rng(4)
    nu = rng.standard_normal(200_000)
    eps = stats.invgamma(0.5, scale=0.5).rvs(200_000, random_state=rng)
    val, _, lp = _half_cauchy_product(nu, np.log(eps), 2.0)
    assert stats.kstest(val, stats.halfcauchy(scale=2.0).cdf).pvalue > 1e-3
    ref = stats.norm.logpdf(nu) + stats.invgamma(0.5, scale=0.5).logpdf(eps) + np.log(eps)
    np.testing.assert_allclose(lp, ref, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("backend", ["compiled", "python"])
def test_conjugate_gmrf_posterior_mean(backend):
    model, mean, cov = conjugate_gmrf(n=12)
    cfg = SamplerConfig(chains=2, warmup=300, iters=1500, thin=1, backend=backend, seed=5)
    res = sample(model, cfg)
    post = collect(model, res, cfg)
    assert post.divergences.sum() == 0
    th = post.theta
    for i in range(th.shape[-1]):
        mcse = np.sqrt(cov[i, i] / ess(th[:, :, i]))
        assert abs(th[:, :, i].mean() - mean[i]) < 4 * mcse


def test_reproducible_and_distinct_chains():
    t = DiagGaussian(np.zeros(3), 1.0)
    cfg = SamplerConfig(chains=2, warmup=50, iters=100, thin=1, seed=9)
    a, b = sample(t, cfg), sample(t, cfg)
    for ra, rb in zip(a, b):
        assert np.array_equal(ra.draws, rb.draws)
    assert not np.array_equal(a[0].draws, a[1].draws)
    c = sample(t, SamplerConfig(chains=2, warmup=50, iters=100, thin=1, seed=10))
    assert not np.array_equal(a[0].draws, c[0].draws)


def test_workers_do_not_change_results():
    t = DiagGaussian(np.zeros(2), 1.0, compiled=False)
    cfg = SamplerConfig(chains=2, warmup=30, iters=40, thin=1, seed=2, backend="python")
    a = sample(t, cfg)
    from dataclasses import replace
    b = sample(t, replace(cfg, workers=2))
    assert all(np.array_equal(x.draws, y.draws) for x, y in zip(a, b))


def test_thinning_and_shapes():
    t = DiagGaussian(np.zeros(2), 1.0)
    r = run_chain(t, SamplerConfig(chains=1, warmup=20, iters=50, thin=5))
    assert r.draws.shape == (10, 2) and r.divergent.shape == (50,)


class _Broken:
    dim = 2

    def logp_grad(self, x):
        return float("nan"), np.zeros(2)


def test_init_failure():
    with pytest.raises(SamplerError):
        init_state(_Broken(), chain_rng(1, 0))


def test_init_state_in_radius():
    x, lp, g = init_state(DiagGaussian(np.zeros(4), 1.0), chain_rng(1, 0), radius=2.0)
    assert np.all(np.abs(x) <= 2.0) and np.isfinite(lp)


def test_warmup_windows():
    w = warmup_windows(500)
    assert w[0][0] == 75 and w[-1][1] == 450
    assert all(a[1] == b[0] for a, b in zip(w, w[1:]))
    assert warmup_windows(10) == []


@pytest.mark.parametrize("bad", [dict(chains=0), dict(iters=0), dict(thin=0), dict(warmup=-1),
                                 dict(target_accept=1.0), dict(max_treedepth=0),
                                 dict(iters=3, thin=5), dict(backend="stan")])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SamplerConfig(**bad)


def test_backends_agree_in_distribution():
    t = DiagGaussian([0.0, 5.0], [1.0, 0.1])
    out = {}
    for backend in ("compiled", "python"):
        res = sample(t, SamplerConfig(chains=2, warmup=300, iters=3000, thin=1, seed=1, backend=backend))
        out[backend] = np.concatenate([r.draws for r in res])
    for j in range(2):
        assert stats.ks_2samp(out["compiled"][::10, j], out["python"][::10, j]).pvalue > 1e-3
