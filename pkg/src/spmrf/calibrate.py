"""Calibration of the half-Cauchy scale ``zeta`` of the global smoothing prior.

Given an upper bound ``U`` on the average marginal sd of ``theta`` and a tail
probability ``alpha``, ``zeta`` is chosen so that
``P(gamma * sigma_ref > U) = alpha`` under ``gamma ~ C+(0, zeta)``, where
``sigma_ref`` is the geometric mean of the prior marginal sds at
``gamma = 1``. The prior is the proper random walk with
``theta_1 ~ N(mu, omega^2)`` and, for order 2, ``theta_2 - theta_1 ~ N(0, gamma^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import check_order
from .model import ObservationModel, transform_data


@dataclass(frozen=True)
class CalibrationInputs:
    k: int
    n: int
    omega2: float
    U: float
    alpha: float = 0.05

    def __post_init__(self):
        check_order(self.k)
        if self.n < 1:
            raise ValueError("n must be positive")
        if not (self.omega2 > 0 and self.U > 0):
            raise ValueError("omega2 and U must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class CalibrationResult:
    k: int
    n: int
    omega2: float
    U: float
    alpha: float
    sigma_ref: float
    zeta: float

    def as_dict(self) -> dict:
        return dict(k=self.k, n=self.n, omega2=self.omega2, U=self.U, alpha=self.alpha,
                    sigma_ref=self.sigma_ref, zeta=self.zeta)


def precision_matrix(k: int, n: int, omega2: float, gamma: float = 1.0) -> np.ndarray:
    """Dense precision matrix of the proper order-``k`` random walk."""
    k = check_order(k)
    if n < k + 2:
        raise ValueError(f"n must be at least {k + 2} for an order-{k} model")
    if not (omega2 > 0 and gamma > 0):
        raise ValueError("omega2 and gamma must be positive")
    # rows of the full-rank difference map: first-order rows for the initial
    # differences, order-k rows for the rest
    D = np.zeros((n - 1, n))
    for j in range(n - 1):
        if j < k - 1 or k == 1:
            D[j, j:j + 2] = (-1.0, 1.0)
        else:
            D[j, j - 1:j + 2] = (1.0, -2.0, 1.0)
    Q = D.T @ D
    Q[0, 0] += gamma**2 / omega2
    return Q / gamma**2


def covariance_matrix(k: int, n: int, omega2: float, gamma: float = 1.0) -> np.ndarray:
    """Closed-form inverse of :func:`precision_matrix`.

    Order 1: ``omega^2 + (min(i, l) - 1) gamma^2``. Order 2: ``theta_i`` is
    ``theta_1 + (i - 1) D_1 + sum_j (i - 1 - j) u_j``, giving
    ``omega^2 + gamma^2 [(i-1)(l-1) + sum_{j=1}^{min(i,l)-2} (i-1-j)(l-1-j)]``.
    """
    k = check_order(k)
    i = np.arange(1, n + 1)[:, None].astype(float)
    l = np.arange(1, n + 1)[None, :].astype(float)
    lo = np.minimum(i, l)
    if k == 1:
        return omega2 + (lo - 1.0) * gamma**2
    # sum_{j=1}^{M} (a - j)(b - j) with a = i - 1, b = l - 1, M = lo - 2
    a, b, M = i - 1.0, l - 1.0, np.maximum(lo - 2.0, 0.0)
    s = M * a * b - (a + b) * M * (M + 1) / 2.0 + M * (M + 1) * (2 * M + 1) / 6.0
    return omega2 + gamma**2 * (a * b + s)


def marginal_variances(k: int, n: int, omega2: float, gamma: float = 1.0) -> np.ndarray:
    """Diagonal of the prior covariance, without forming any matrix."""
    k = check_order(k)
    i = np.arange(1, n + 1, dtype=float)
    if k == 1:
        return omega2 + (i - 1.0) * gamma**2
    return omega2 + i * (i - 1.0) * (2.0 * i - 1.0) / 6.0 * gamma**2


def marginal_sd_ref(k: int, n: int, omega2: float) -> float:
    """Geometric mean of the marginal sds at ``gamma = 1``."""
    v = marginal_variances(k, n, omega2, 1.0)
    return float(np.exp(np.mean(0.5 * np.log(v))))


def zeta(U: float, sigma_ref: float, alpha: float = 0.05) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if not (U > 0 and sigma_ref > 0):
        raise ValueError("U and sigma_ref must be positive")
    return U / (sigma_ref * np.tan(0.5 * np.pi * (1.0 - alpha)))


def estimate_U(y, obs: ObservationModel) -> float:
    """Sample sd of the data on the ``theta`` scale."""
    t = transform_data(y, obs)
    if t.size < 2:
        raise ValueError("need at least two observations")
    sd = float(np.std(t, ddof=1))
    if not sd > 0:
        raise ValueError("transformed data have zero variance")
    return sd


def rescale_zeta(zeta_old: float, k: int, m: float) -> float:
    """``zeta`` after densifying a regular grid by factor ``m``."""
    k = check_order(k)
    if not m > 0:
        raise ValueError("densification factor must be positive")
    return zeta_old * m ** (-0.5 if k == 1 else -1.5)


def convert_order(zeta_from: float, sigma_ref_from: float, sigma_ref_to: float) -> float:
    """Carry ``zeta`` to a model of another order at fixed ``U`` and ``alpha``."""
    return zeta_from * sigma_ref_from / sigma_ref_to


def calibrate(inputs: CalibrationInputs) -> CalibrationResult:
    sref = marginal_sd_ref(inputs.k, inputs.n, inputs.omega2)
    return CalibrationResult(inputs.k, inputs.n, inputs.omega2, inputs.U, inputs.alpha,
                             sref, zeta(inputs.U, sref, inputs.alpha))


def calibrate_from_data(y, obs: ObservationModel, k: int, alpha: float = 0.05,
                        U: float | None = None, omega2: float | None = None) -> CalibrationResult:
    """Full pipeline: ``U`` is the transformed-data sd and ``omega^2`` its
    variance unless given explicitly."""
    sd = estimate_U(y, obs)
    U = sd if U is None else U
    omega2 = sd**2 if omega2 is None else omega2
    return calibrate(CalibrationInputs(k=k, n=len(np.asarray(y)), omega2=omega2, U=U, alpha=alpha))
