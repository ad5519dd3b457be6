"""Posterior over change-point locations, defined as the largest drop.

For each draw the change point is the index ``i`` maximising
``f_i - f_{i+1}``; ties go to the smallest index. It is reported at ``x_i``,
the last location before the drop. ``f`` is whatever trend values are passed
in; for count data the drop is meant in the rate, so pass ``exp(theta)``
(see :func:`spmrf.cli.natural_scale`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def max_drop_index(theta) -> int:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size < 2:
        raise ValueError("need a 1-D trend with at least two points")
    return int(np.argmax(theta[:-1] - theta[1:]))


@dataclass
class ChangepointPosterior:
    locations: np.ndarray  # candidate locations x_1..x_{n-1}
    counts: np.ndarray
    draws: np.ndarray  # per-draw change-point location

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def mode(self) -> float:
        return float(self.locations[int(np.argmax(self.counts))])

    def quantiles(self, probs=(0.25, 0.5, 0.75)) -> np.ndarray:
        return np.quantile(self.draws, probs, method="linear")

    @property
    def iqr(self) -> float:
        q = self.quantiles((0.25, 0.75))
        return float(q[1] - q[0])


def changepoint_posterior(theta_draws, locations) -> ChangepointPosterior:
    """Histogram of max-drop locations over draws shaped ``(..., n)``."""
    th = np.asarray(theta_draws, dtype=float)
    th = th.reshape(-1, th.shape[-1])
    loc = np.asarray(locations, dtype=float)
    if loc.size != th.shape[1]:
        raise ValueError("locations and draws disagree on n")
    if th.shape[1] < 2:
        raise ValueError("need at least two grid points")
    idx = np.argmax(th[:, :-1] - th[:, 1:], axis=1)
    counts = np.bincount(idx, minlength=loc.size - 1).astype(float)
    return ChangepointPosterior(locations=loc[:-1].copy(), counts=counts, draws=loc[idx])
