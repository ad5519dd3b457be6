"""Model specification and log-posteriors for shrinkage-prior trend models.

The latent trend ``theta`` has order-``k`` increments
``N(0, d_j tau_j^2)`` where ``d_j`` is the grid scale factor and the local
scales ``tau_j`` follow a normal (constant ``tau_j = gamma``), Laplace or
horseshoe mixing law. Everything is sampled in an unconstrained,
non-centred space.

Unconstrained layout (in order)::

    z0                    1       theta_1 = mu + omega * z0
    z_init                k - 1   initial first difference (k == 2 only)
    z                     n - k   standardised order-k increments
    local scales          see below (hierarchical Laplace / horseshoe only)
    gamma auxiliaries     2       (nu, log eps), absent if gamma is fixed
    sigma auxiliaries     2       (nu, log eps), normal observations only

Local scale auxiliaries cover the ``k - 1`` initial-difference scales followed
by the ``n - k`` increment scales:

* Laplace: ``log e`` with ``e ~ Exp(1)`` and ``tau^2 = 2 gamma^2 e``.
* Horseshoe: all ``nu`` values, then all ``log eps`` values, with
  ``tau = gamma |nu| sqrt(eps)``, ``nu ~ N(0, 1)`` and
  ``eps ~ InvGamma(1/2, 1/2)``, so that ``tau ~ C+(0, gamma)``.

Every half-Cauchy scale (``gamma``, horseshoe ``tau``, ``sigma``) uses that
``|nu| sqrt(eps)`` product construction.

In the marginal formulation (normal and Laplace priors only) the local scales
are integrated out and the standardised increments ``v`` carry the marginal
law directly: ``N(0, 1)`` for the normal prior and ``Laplace(0, 1)`` for the
Laplace prior, multiplied by ``sqrt(d_j) gamma``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.special import expit, gammaln

from .grid import DifferenceOperator, Grid, check_order, scale_factors

LOG_2PI = np.log(2.0 * np.pi)
HALF_LOG_2PI = 0.5 * LOG_2PI
LOG_2 = np.log(2.0)


class Prior(str, enum.Enum):
    NORMAL = "normal"
    LAPLACE = "laplace"
    HORSESHOE = "horseshoe"


class Formulation(str, enum.Enum):
    HIERARCHICAL = "hierarchical"
    MARGINAL = "marginal"


class UnsupportedModelError(ValueError):
    """Raised for model configurations that are deliberately not offered."""


@dataclass(frozen=True)
class NormalObs:
    """Gaussian observations ``y_i ~ N(theta_i, sigma^2)``, ``sigma ~ C+(0, sigma_scale)``."""

    sigma_scale: float = 5.0
    name = "normal"

    def __post_init__(self):
        if not self.sigma_scale > 0:
            raise ValueError("sigma_scale must be positive")


@dataclass(frozen=True)
class PoissonObs:
    """Counts ``y_i ~ Poisson(exp(theta_i))``."""

    name = "poisson"


@dataclass(frozen=True, eq=False)
class BinomialObs:
    """Counts ``y_i ~ Binomial(m_i, expit(theta_i))``."""

    trials: np.ndarray
    name = "binomial"

    def __post_init__(self):
        m = np.asarray(self.trials)
        if m.ndim == 0:
            m = m.reshape(1)
        if np.any(m < 1) or np.any(m != np.round(m)):
            raise ValueError("binomial trials must be positive integers")
        m = m.astype(float)
        m.setflags(write=False)
        object.__setattr__(self, "trials", m)

    def trials_for(self, n: int) -> np.ndarray:
        if self.trials.size == 1:
            return np.full(n, self.trials[0])
        if self.trials.size != n:
            raise ValueError(f"{self.trials.size} trial counts for {n} observations")
        return self.trials

    def __eq__(self, other):
        return isinstance(other, BinomialObs) and np.array_equal(self.trials, other.trials)

    def __hash__(self):
        return hash(self.trials.tobytes())


ObservationModel = NormalObs | PoissonObs | BinomialObs


def validate_data(y, obs: ObservationModel) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise ValueError("observations must be finite")
    if isinstance(obs, PoissonObs):
        if np.any(y < 0) or np.any(y != np.round(y)):
            raise ValueError("Poisson observations must be nonnegative integers")
    elif isinstance(obs, BinomialObs):
        m = obs.trials_for(y.size)
        if np.any(y < 0) or np.any(y > m) or np.any(y != np.round(y)):
            raise ValueError("binomial observations must be integers in 0..m")
    return y


def transform_data(y, obs: ObservationModel) -> np.ndarray:
    """Map observations onto the scale of ``theta``.

    Identity for normal data, ``log(y + 0.5)`` for counts and
    ``logit((y + q) / m)`` for binomial data with ``q = 0.005`` at ``y = 0``
    and ``q = -0.005`` at ``y = m``.
    """
    y = validate_data(y, obs)
    if isinstance(obs, NormalObs):
        return y
    if isinstance(obs, PoissonObs):
        return np.log(y + 0.5)
    m = obs.trials_for(y.size)
    q = np.where(y == 0, 0.005, np.where(y == m, -0.005, 0.0))
    p = (y + q) / m
    return np.log(p) - np.log1p(-p)


def default_theta1_prior(y, obs: ObservationModel) -> tuple[float, float]:
    """Mean and twice the sample sd of the transformed data."""
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        raise ValueError("need at least two observations")
    t = transform_data(y, obs)
    mu = float(np.mean(t))
    omega = 2.0 * float(np.std(t, ddof=1))
    if not omega > 0:
        raise ValueError("transformed data have zero variance; theta_1 prior sd would be 0")
    return mu, omega


@dataclass(frozen=True)
class ModelSpec:
    """Declarative trend model.

    ``fixed_gamma`` / ``fixed_sigma`` pin those scales and drop their
    auxiliaries from the parameter vector (used for conjugate checks).
    """

    grid: Grid
    k: int
    prior: Prior
    obs: ObservationModel
    zeta: float
    mu: float
    omega: float
    fixed_gamma: float | None = None
    fixed_sigma: float | None = None

    def __post_init__(self):
        check_order(self.k)
        self.grid.check_order(self.k)
        object.__setattr__(self, "prior", Prior(self.prior))
        if not (self.zeta > 0 and np.isfinite(self.zeta)):
            raise ValueError("zeta must be positive")
        if not (self.omega > 0 and np.isfinite(self.omega)):
            raise ValueError("omega must be positive")
        if not np.isfinite(self.mu):
            raise ValueError("mu must be finite")
        for name in ("fixed_gamma", "fixed_sigma"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_data(cls, y, grid, k, prior, obs, zeta, **kw) -> "ModelSpec":
        mu, omega = default_theta1_prior(y, obs)
        return cls(grid=grid, k=k, prior=Prior(prior), obs=obs, zeta=zeta, mu=mu, omega=omega, **kw)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def has_sigma(self) -> bool:
        return isinstance(self.obs, NormalObs) and self.fixed_sigma is None

    def with_(self, **kw) -> "ModelSpec":
        return replace(self, **kw)


@dataclass(frozen=True)
class Layout:
    """Slices of the unconstrained vector; see the module docstring."""

    n: int
    k: int
    prior: Prior
    formulation: Formulation
    has_gamma: bool
    has_sigma: bool
    slices: dict = field(default_factory=dict)
    size: int = 0

    @classmethod
    def build(cls, spec: ModelSpec, formulation=Formulation.HIERARCHICAL) -> "Layout":
        formulation = Formulation(formulation)
        n, k = spec.n, spec.k
        nscale = n - 1  # k - 1 initial scales + n - k increment scales
        parts = [("z0", 1), ("z_init", k - 1), ("z", n - k)]
        if formulation is Formulation.HIERARCHICAL:
            if spec.prior is Prior.LAPLACE:
                parts.append(("eta_local", nscale))
            elif spec.prior is Prior.HORSESHOE:
                parts += [("nu_local", nscale), ("eta_local", nscale)]
        has_gamma = spec.fixed_gamma is None
        if has_gamma:
            parts.append(("gamma", 2))
        if spec.has_sigma:
            parts.append(("sigma", 2))
        slices, start = {}, 0
        for name, size in parts:
            slices[name] = slice(start, start + size)
            start += size
        return cls(n, k, spec.prior, formulation, has_gamma, spec.has_sigma, slices, start)

    def names(self) -> list[str]:
        out = []
        for name, sl in self.slices.items():
            size = sl.stop - sl.start
            if name == "gamma" or name == "sigma":
                out += [f"{name}_nu", f"{name}_log_eps"]
            elif size == 1 and name == "z0":
                out.append(name)
            else:
                out += [f"{name}[{i}]" for i in range(1, size + 1)]
        return out


class PosteriorEval(NamedTuple):
    logp: float
    grad: np.ndarray


@dataclass
class Constrained:
    """Constrained parameters. ``alpha`` is empty for first-order models."""

    theta: np.ndarray
    tau: np.ndarray | None
    alpha: np.ndarray | None
    gamma: float
    sigma: float | None


def _half_cauchy_product(nu, eta, base):
    """``base |nu| exp(eta / 2)`` and the log prior of ``(nu, log eps)``."""
    root = np.exp(0.5 * eta)
    value = base * np.abs(nu) * root
    logp = -LOG_2PI - 0.5 * nu * nu - 0.5 * eta - 0.5 * np.exp(-eta)
    return value, root, logp


class TrendModel:
    """Log-posterior with analytic gradient for a fixed spec and data set.

    Parameters
    ----------
    spec : ModelSpec
    y : array_like
        Observations, one per grid node.
    formulation : {"hierarchical", "marginal"}
        The marginal formulation integrates out the local scales and is only
        offered for normal and Laplace priors.
    """

    def __init__(self, spec: ModelSpec, y, formulation="hierarchical"):
        formulation = Formulation(formulation)
        if formulation is Formulation.MARGINAL and spec.prior is Prior.HORSESHOE:
            raise UnsupportedModelError(
                "marginal sampling of the horseshoe prior is not supported; "
                "use the hierarchical formulation")
        y = validate_data(y, spec.obs)
        if y.size != spec.n:
            raise ValueError(f"{y.size} observations for a grid of {spec.n} points")
        self.spec = spec
        self.y = y
        self.formulation = formulation
        self.layout = Layout.build(spec, formulation)
        self.dim = self.layout.size
        self.op = DifferenceOperator(spec.grid, spec.k)
        d_inc = scale_factors(spec.k, spec.grid)
        d_init = spec.grid.spacings[:1] if spec.k == 2 else np.empty(0)
        self.d = np.concatenate([d_init, d_inc])
        self.sqrt_d = np.sqrt(self.d)
        self._obs_setup()
        self._kdata = None

    def _obs_setup(self):
        obs, y = self.spec.obs, self.y
        if isinstance(obs, NormalObs):
            self._lik_const = -y.size * HALF_LOG_2PI
        elif isinstance(obs, PoissonObs):
            self._lik_const = -float(np.sum(gammaln(y + 1.0)))
        else:
            m = obs.trials_for(y.size)
            self._m = m
            self._lik_const = float(np.sum(gammaln(m + 1.0) - gammaln(y + 1.0) - gammaln(m - y + 1.0)))

    # -- likelihood -----------------------------------------------------
    def loglik(self, theta, sigma=None):
        """Log-likelihood, its gradient in ``theta`` and in ``sigma``."""
        y = self.y
        obs = self.spec.obs
        if isinstance(obs, NormalObs):
            r = y - theta
            ss = float(np.dot(r, r))
            ll = self._lik_const - y.size * np.log(sigma) - 0.5 * ss / sigma**2
            return ll, r / sigma**2, -y.size / sigma + ss / sigma**3
        if isinstance(obs, PoissonObs):
            rate = np.exp(theta)
            return self._lik_const + float(np.dot(y, theta) - np.sum(rate)), y - rate, 0.0
        m = self._m
        ll = self._lik_const + float(np.dot(y, theta) - np.dot(m, np.logaddexp(0.0, theta)))
        return ll, y - m * expit(theta), 0.0

    # -- transforms -----------------------------------------------------
    def _gamma(self, x):
        spec = self.spec
        if spec.fixed_gamma is not None:
            return spec.fixed_gamma, None, 0.0
        nu, eta = x[self.layout.slices["gamma"]]
        g, root, lp = _half_cauchy_product(nu, eta, spec.zeta)
        return g, (nu, eta, root), lp

    def _sigma(self, x):
        spec = self.spec
        if not isinstance(spec.obs, NormalObs):
            return None, None, 0.0
        if spec.fixed_sigma is not None:
            return spec.fixed_sigma, None, 0.0
        nu, eta = x[self.layout.slices["sigma"]]
        s, root, lp = _half_cauchy_product(nu, eta, spec.obs.sigma_scale)
        return s, (nu, eta, root), lp

    def _local_scales(self, x, gamma):
        """Local scales for the n - 1 non-initial-value coordinates."""
        L = self.layout
        prior = self.spec.prior
        if L.formulation is Formulation.MARGINAL or prior is Prior.NORMAL:
            return np.full(self.d.size, gamma), None
        eta = x[L.slices["eta_local"]]
        if prior is Prior.LAPLACE:
            root = np.exp(0.5 * eta)
            return np.sqrt(2.0) * gamma * root, (eta, root)
        nu = x[L.slices["nu_local"]]
        root = np.exp(0.5 * eta)
        return gamma * np.abs(nu) * root, (nu, eta, root)

    def constrain(self, x) -> Constrained:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a parameter vector of length {self.dim}, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite parameter vector")
        gamma, _, _ = self._gamma(x)
        sigma, _, _ = self._sigma(x)
        tau_all, _ = self._local_scales(x, gamma)
        theta = self._theta(x, tau_all)
        k = self.spec.k
        hier = self.formulation is Formulation.HIERARCHICAL
        return Constrained(
            theta=theta,
            tau=tau_all[k - 1:].copy() if hier else None,
            alpha=tau_all[:k - 1].copy() if hier else None,
            gamma=float(gamma),
            sigma=None if sigma is None else float(sigma),
        )

    def _theta(self, x, tau_all):
        n = self.spec.n
        b = np.empty(n)
        b[0] = self.spec.mu + self.spec.omega * x[0]
        b[1:] = self.sqrt_d * tau_all * x[1:n]
        return self.op.integrate(b)

    # -- log posterior --------------------------------------------------
    def logp_grad(self, x) -> tuple[float, np.ndarray]:
        spec, L = self.spec, self.layout
        n = spec.n
        x = np.asarray(x, dtype=float)
        grad = np.zeros(self.dim)
        gamma, gpar, lp = self._gamma(x)
        sigma, spar, lp_s = self._sigma(x)
        lp += lp_s
        tau_all, lpar = self._local_scales(x, gamma)
        s = self.sqrt_d * tau_all
        zall = x[1:n]
        b = np.empty(n)
        b[0] = spec.mu + spec.omega * x[0]
        b[1:] = s * zall
        theta = self.op.integrate(b)

        ll, g_theta, g_sigma = self.loglik(theta, sigma)
        g_b = self.op.integrate_adjoint(g_theta)

        # standardised coordinates
        z0 = x[0]
        lp += -HALF_LOG_2PI - 0.5 * z0 * z0
        grad[0] = g_b[0] * spec.omega - z0
        marginal_laplace = L.formulation is Formulation.MARGINAL and spec.prior is Prior.LAPLACE
        if marginal_laplace:
            lp += -zall.size * LOG_2 - float(np.sum(np.abs(zall)))
            grad[1:n] = g_b[1:] * s - np.sign(zall)
        else:
            lp += -zall.size * HALF_LOG_2PI - 0.5 * float(np.dot(zall, zall))
            grad[1:n] = g_b[1:] * s - zall

        # local scales
        g_tau = g_b[1:] * zall * self.sqrt_d
        if lpar is None:
            # every local scale equals gamma
            g_gamma = float(np.sum(g_tau))
        elif spec.prior is Prior.LAPLACE:
            eta, root = lpar
            e = root * root
            lp += float(np.sum(eta - e))
            grad[L.slices["eta_local"]] = 0.5 * g_tau * tau_all + 1.0 - e
            g_gamma = float(np.dot(g_tau, tau_all)) / gamma
        else:
            nu, eta, root = lpar
            lp += float(-(nu.size) * LOG_2PI - 0.5 * np.dot(nu, nu) - 0.5 * np.sum(eta) - 0.5 * np.sum(np.exp(-eta)))
            grad[L.slices["nu_local"]] = g_tau * gamma * np.sign(nu) * root - nu
            grad[L.slices["eta_local"]] = 0.5 * g_tau * tau_all - 0.5 + 0.5 * np.exp(-eta)
            g_gamma = float(np.dot(g_tau, tau_all)) / gamma

        if gpar is not None:
            nu, eta, root = gpar
            sl = L.slices["gamma"]
            grad[sl.start] = g_gamma * spec.zeta * np.sign(nu) * root - nu
            grad[sl.start + 1] = 0.5 * g_gamma * gamma - 0.5 + 0.5 * np.exp(-eta)
        if spar is not None:
            nu, eta, root = spar
            sl = L.slices["sigma"]
            grad[sl.start] = g_sigma * spec.obs.sigma_scale * np.sign(nu) * root - nu
            grad[sl.start + 1] = 0.5 * g_sigma * sigma - 0.5 + 0.5 * np.exp(-eta)

        logp = float(lp + ll)
        return logp, grad

    def kernel_data(self):
        """Arguments for the compiled log-posterior ``_kernels.trend_logp_grad``."""
        from . import _kernels as K

        spec, L = self.spec, self.layout
        ip = np.zeros(K.N_INT, dtype=np.int64)
        ip[K.I_N], ip[K.I_K] = spec.n, spec.k
        ip[K.I_PRIOR] = K.PRIOR_CODES[spec.prior.value]
        ip[K.I_MARGINAL] = int(self.formulation is Formulation.MARGINAL)
        ip[K.I_OBS] = K.OBS_CODES[spec.obs.name]
        ip[K.I_HAS_GAMMA], ip[K.I_HAS_SIGMA] = int(L.has_gamma), int(L.has_sigma)
        for slot, name in ((K.I_NU_LOCAL, "nu_local"), (K.I_ETA_LOCAL, "eta_local"),
                           (K.I_GAMMA, "gamma"), (K.I_SIGMA, "sigma")):
            ip[slot] = L.slices[name].start if name in L.slices else -1
        ip[K.I_DIM] = self.dim
        ip[K.I_REGULAR] = int(spec.grid.regular)
        fp = np.zeros(K.N_FLOAT)
        fp[K.F_MU], fp[K.F_OMEGA], fp[K.F_ZETA] = spec.mu, spec.omega, spec.zeta
        fp[K.F_SIGMA_SCALE] = spec.obs.sigma_scale if isinstance(spec.obs, NormalObs) else 1.0
        fp[K.F_FIXED_GAMMA] = spec.fixed_gamma if spec.fixed_gamma is not None else np.nan
        fp[K.F_FIXED_SIGMA] = spec.fixed_sigma if spec.fixed_sigma is not None else np.nan
        fp[K.F_LIK_CONST] = self._lik_const
        m = self._m if isinstance(spec.obs, BinomialObs) else np.zeros(spec.n)
        r = spec.grid.ratios() if spec.n > 2 else np.ones(0)
        return (ip, fp, self.y.copy(), np.asarray(m, float).copy(), self.sqrt_d.copy(),
                np.ascontiguousarray(r, dtype=float))

    def compiled(self):
        """``(fn, data)`` for the compiled sampler backend."""
        from . import _kernels

        if self._kdata is None:
            self._kdata = self.kernel_data()
        return _kernels.trend_logp_grad, self._kdata

    def __call__(self, x) -> PosteriorEval:
        return PosteriorEval(*self.logp_grad(x))

    def logp(self, x) -> float:
        return self.logp_grad(x)[0]

    def reference_point(self) -> np.ndarray:
        """Zero innovations with every scale auxiliary at its transform origin."""
        x = np.zeros(self.dim)
        for name in ("nu_local", ):
            if name in self.layout.slices:
                x[self.layout.slices[name]] = 1.0
        for name in ("gamma", "sigma"):
            if name in self.layout.slices:
                x[self.layout.slices[name].start] = 1.0
        return x


def log_posterior_hierarchical(spec: ModelSpec, x, y) -> PosteriorEval:
    return TrendModel(spec, y, Formulation.HIERARCHICAL)(x)


def log_posterior_marginal(spec: ModelSpec, x, y) -> PosteriorEval:
    return TrendModel(spec, y, Formulation.MARGINAL)(x)


def constrain(spec: ModelSpec, x, y=None, formulation="hierarchical") -> Constrained:
    """Constrained parameters for ``x``; ``y`` only fixes the data length."""
    if y is None:
        y = np.zeros(spec.n)
    return TrendModel(spec, y, formulation).constrain(x)
