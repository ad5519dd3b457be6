"""Convergence diagnostics and posterior summaries.

``rhat`` is the split-chain potential scale reduction factor. ``ess`` uses
split chains, FFT autocovariances combined across chains, and Geyer's
initial monotone sequence truncation; it is capped at
``N * log10(N)`` for ``N`` total draws, which only matters for strongly
antithetic chains.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class DegenerateChainWarning(UserWarning):
    """Zero-variance draws; the diagnostic value is a convention, not an estimate."""


def _as_chains(chains) -> np.ndarray:
    a = np.asarray(chains, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ValueError("expected draws shaped (chains, draws)")
    return a


def split_chains(chains) -> np.ndarray:
    """Split each chain in half, dropping the middle draw of odd-length chains."""
    a = _as_chains(chains)
    n = a.shape[1]
    half = n // 2
    return np.concatenate([a[:, :half], a[:, n - half:]], axis=0)


def rhat(chains) -> float:
    """Split-R-hat, ``sqrt(var_plus / W)``.

    Constant input returns 1.0 with a :class:`DegenerateChainWarning`;
    constant chains that disagree with each other return ``inf``.
    """
    a = split_chains(chains)
    m, n = a.shape
    if m < 2 or n < 2:
        raise ValueError("need at least 4 draws to compute split R-hat")
    means = a.mean(axis=1)
    W = float(np.mean(a.var(axis=1, ddof=1)))
    B = n * float(np.var(means, ddof=1))
    if W == 0.0:
        if B == 0.0:
            warnings.warn("all draws identical; R-hat set to 1", DegenerateChainWarning, stacklevel=2)
            return 1.0
        return float("inf")
    var_plus = (n - 1) / n * W + B / n
    return float(np.sqrt(var_plus / W))


def autocovariance(x) -> np.ndarray:
    """Biased autocovariance of a 1-D series at all lags (FFT)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    xc = x - x.mean()
    f = np.fft.rfft(xc, size)
    ac = np.fft.irfft(f * np.conj(f), size)[:n]
    return ac / n


def ess(chains) -> float:
    """Effective sample size of draws shaped ``(chains, draws)``.

    Returns ``nan`` with a :class:`DegenerateChainWarning` for constant input.
    """
    a = split_chains(chains)
    m, n = a.shape
    if n < 4:
        raise ValueError("need at least 8 draws per chain to compute ESS")
    acov = np.array([autocovariance(c) for c in a])
    chain_means = a.mean(axis=1)
    mean_var = float(np.mean(acov[:, 0])) * n / (n - 1.0)
    var_plus = mean_var * (n - 1.0) / n
    if m > 1:
        var_plus += float(np.var(chain_means, ddof=1))
    if not var_plus > 0:
        warnings.warn("zero-variance draws; ESS undefined", DegenerateChainWarning, stacklevel=2)
        return float("nan")
    acov_mean = acov.mean(axis=0)
    rho = np.zeros(n)
    rho[0] = 1.0
    rho_even = 1.0
    rho_odd = 1.0 - (mean_var - acov_mean[1]) / var_plus
    rho[1] = rho_odd
    s = 1
    while s < n - 4 and rho_even + rho_odd > 0:
        rho_even = 1.0 - (mean_var - acov_mean[s + 1]) / var_plus
        rho_odd = 1.0 - (mean_var - acov_mean[s + 2]) / var_plus
        if rho_even + rho_odd >= 0:
            rho[s + 1] = rho_even
            rho[s + 2] = rho_odd
        s += 2
    max_s = s
    if rho_even > 0:
        rho[max_s + 1] = rho_even
    # initial monotone sequence
    for t in range(1, max_s - 2, 2):
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0
            rho[t + 2] = rho[t + 1]
    total = m * n
    tau = -1.0 + 2.0 * float(np.sum(rho[:max_s])) + rho[max_s + 1]
    return float(min(total / tau, total * np.log10(total)))


def ess_cap(total_draws: int) -> float:
    return total_draws * np.log10(total_draws)


def quantiles(draws, probs=(0.025, 0.5, 0.975)) -> np.ndarray:
    """Linear-interpolation (type 7) quantiles along the first axis."""
    return np.quantile(np.asarray(draws, dtype=float), probs, axis=0, method="linear")


@dataclass
class FitSummary:
    """Per-parameter summary table plus efficiency figures.

    ``min_essps`` and ``mean_essps`` divide each parameter's ESS by the
    sampling CPU seconds summed over chains (chains are run sequentially).
    """

    names: list
    median: np.ndarray
    q025: np.ndarray
    q975: np.ndarray
    ess: np.ndarray
    rhat: np.ndarray
    total_cpu: float
    sample_cpu: float
    min_essps: float
    mean_essps: float
    divergences: int
    treedepth_hits: int

    def rows(self):
        for i, name in enumerate(self.names):
            yield name, self.median[i], self.q025[i], self.q975[i], self.ess[i], self.rhat[i]

    @property
    def max_rhat(self) -> float:
        return float(np.nanmax(self.rhat))

    @property
    def min_ess(self) -> float:
        return float(np.nanmin(self.ess))


def essps(ess_value: float, sample_cpu_seconds: float) -> float:
    if not sample_cpu_seconds > 0:
        return float("nan")
    return ess_value / sample_cpu_seconds


def summarize_draws(theta, scalars: dict | None = None, sample_cpu: float = float("nan"),
                    warmup_cpu: float = 0.0, divergences: int = 0, treedepth_hits: int = 0) -> FitSummary:
    """Summaries from arrays: ``theta`` is ``(chains, draws, n)`` and each
    entry of ``scalars`` is ``(chains, draws)``."""
    theta = np.asarray(theta, dtype=float)
    C, D, n = theta.shape
    cols = [theta[:, :, i] for i in range(n)]
    names = [f"theta[{i + 1}]" for i in range(n)]
    for name, arr in (scalars or {}).items():
        cols.append(np.asarray(arr, dtype=float))
        names.append(name)
    flat = np.stack([c.reshape(-1) for c in cols], axis=1)
    q = quantiles(flat)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateChainWarning)
        ess_vals = np.array([ess(c) for c in cols])
        rhat_vals = np.array([rhat(c) for c in cols])
    if sample_cpu > 0:
        rates = ess_vals / sample_cpu
        min_rate, mean_rate = float(np.nanmin(rates)), float(np.nanmean(rates))
    else:
        min_rate = mean_rate = float("nan")
    return FitSummary(
        names=names, median=q[1], q025=q[0], q975=q[2], ess=ess_vals, rhat=rhat_vals,
        total_cpu=sample_cpu + warmup_cpu, sample_cpu=sample_cpu,
        min_essps=min_rate, mean_essps=mean_rate,
        divergences=int(divergences), treedepth_hits=int(treedepth_hits),
    )


def summarize(samples) -> FitSummary:
    """Summaries for every ``theta_i`` followed by ``gamma`` (and ``sigma``).

    ESSps divides by the sampling CPU seconds summed over chains.
    """
    return summarize_draws(
        samples.theta, samples.scalar_params(),
        sample_cpu=float(np.sum(samples.sample_cpu)),
        warmup_cpu=float(np.sum(samples.warmup_cpu)),
        divergences=int(np.sum(samples.divergences)),
        treedepth_hits=int(np.sum(samples.treedepth_hits)),
    )
