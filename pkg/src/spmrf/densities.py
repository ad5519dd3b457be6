"""Log-density kernels used by the trend models.

All functions work elementwise on floats or numpy arrays and return values in
log space. Domain violations raise ``ValueError``.

The increment densities take a grid scale factor ``delta`` (the variance
multiplier from :func:`spmrf.grid.scale_factors`); integrating a normal
increment with variance ``delta * tau**2`` over the local scale keeps
``sqrt(delta)`` as a multiplicative factor on the marginal scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

LOG_2PI = np.log(2.0 * np.pi)
LOG_PI = np.log(np.pi)

# blend weight between the lower and upper horseshoe bounds that makes the
# blend integrate to one
HS_WEIGHT = (np.sqrt(np.pi) - 2.0) / (np.sqrt(2.0) - 2.0)


@dataclass(frozen=True)
class ScaledDensityParams:
    """Global scale ``gamma`` and grid scale factor ``delta`` of an increment."""

    gamma: float
    delta: float = 1.0

    def __post_init__(self):
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise ValueError(f"delta must be positive and finite, got {self.delta}")


def _positive(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(arr > 0):
        raise ValueError(f"{name} must be positive")
    return arr


def log_normal(u, mean=0.0, sd=1.0):
    sd = _positive("sd", sd)
    z = (np.asarray(u, dtype=float) - mean) / sd
    return -0.5 * LOG_2PI - np.log(sd) - 0.5 * z * z


def log_half_cauchy(x, scale):
    """Half-Cauchy log density on ``x > 0``."""
    x = _positive("x", x)
    scale = _positive("scale", scale)
    return np.log(2.0) - LOG_PI - np.log(scale) - np.log1p((x / scale) ** 2)


def half_cauchy_cdf(x, scale):
    return 2.0 / np.pi * np.arctan(np.asarray(x, dtype=float) / scale)


def log_exponential(x, rate):
    x = _positive("x", x)
    rate = _positive("rate", rate)
    return np.log(rate) - rate * x


def log_inv_gamma(x, shape, scale):
    """Inverse-gamma log density, ``scale`` being the rate of ``1 / x``."""
    x = _positive("x", x)
    shape = _positive("shape", shape)
    scale = _positive("scale", scale)
    return shape * np.log(scale) - gammaln(shape) - (shape + 1.0) * np.log(x) - scale / x


def log_laplace_marginal(u, p: ScaledDensityParams):
    """Laplace increment density after mixing ``N(0, delta tau^2)`` over
    ``tau^2 ~ Exp(1 / (2 gamma^2))``.

    The result is a Laplace law with scale ``sqrt(delta) * gamma`` and
    variance ``2 delta gamma^2``.
    """
    b = np.sqrt(p.delta) * p.gamma
    return -np.log(2.0 * b) - np.abs(np.asarray(u, dtype=float)) / b


def _hs_parts(u, p):
    u = np.asarray(u, dtype=float)
    if np.any(u == 0):
        raise ValueError("the horseshoe density is unbounded at u = 0")
    a = p.delta * p.gamma**2
    log_c = -0.5 * (np.log(2.0) + 3.0 * LOG_PI + np.log(a))
    return u, a, log_c


def log_horseshoe_lower(u, p: ScaledDensityParams):
    """Lower bound ``0.5 C log(1 + 4 a / u^2)`` on the horseshoe density."""
    u, a, log_c = _hs_parts(u, p)
    return log_c + np.log(0.5 * np.log1p(4.0 * a / u**2))


def log_horseshoe_upper(u, p: ScaledDensityParams):
    """Upper bound ``C log(1 + 2 a / u^2)`` on the horseshoe density."""
    u, a, log_c = _hs_parts(u, p)
    return log_c + np.log(np.log1p(2.0 * a / u**2))


def log_horseshoe_approx(u, p: ScaledDensityParams):
    """Closed-form approximation to the horseshoe density.

    A convex blend ``w B1 + (1 - w) B2`` of the two exponential-integral
    bounds, ``B1 = C/2 log(1 + 4a/u^2)`` and ``B2 = C log(1 + 2a/u^2)`` with
    ``a = delta gamma^2`` and ``C = (2 pi^3 a)^{-1/2}``. The weight
    ``w = (sqrt(pi) - 2) / (sqrt(2) - 2)`` makes it integrate to one.
    """
    u, a, log_c = _hs_parts(u, p)
    u2 = u * u
    mix = 0.5 * HS_WEIGHT * np.log1p(4.0 * a / u2) + (1.0 - HS_WEIGHT) * np.log1p(2.0 * a / u2)
    return log_c + np.log(mix)


def grad_log_horseshoe_approx(u, p: ScaledDensityParams):
    """Derivative of :func:`log_horseshoe_approx` with respect to ``u``."""
    u, a, _ = _hs_parts(u, p)
    u2 = u * u
    mix = 0.5 * HS_WEIGHT * np.log1p(4.0 * a / u2) + (1.0 - HS_WEIGHT) * np.log1p(2.0 * a / u2)
    dmix = (0.5 * HS_WEIGHT * (-8.0 * a / u**3) / (1.0 + 4.0 * a / u2)
            + (1.0 - HS_WEIGHT) * (-4.0 * a / u**3) / (1.0 + 2.0 * a / u2))
    return dmix / mix
