"""Tractable targets shared by the sampler and acceptance tests."""
import numba as nb
import numpy as np

from spmrf.calibrate import precision_matrix
from spmrf.grid import Grid
from spmrf.model import ModelSpec, NormalObs, Prior, TrendModel


@nb.njit
def _gauss_logp_grad(x, data):
    mean, prec = data
    r = x - mean
    return -0.5 * np.sum(prec * r * r), -prec * r


class DiagGaussian:
    """Independent normal target; ``compiled`` enables the numba backend."""

    def __init__(self, mean, sd, compiled=True):
        self.mean = np.asarray(mean, dtype=float)
        self.sd = np.asarray(sd, dtype=float) * np.ones_like(self.mean)
        self.dim = self.mean.size
        self._data = (self.mean.copy(), 1.0 / self.sd**2)
        if compiled:
            self.compiled = lambda: (_gauss_logp_grad, self._data)

    def logp_grad(self, x):
        r = x - self.mean
        prec = self._data[1]
        return -0.5 * float(np.sum(prec * r * r)), -prec * r


def conjugate_gmrf(n=25, k=1, gamma=0.6, sigma=1.0, seed=11):
    """Normal-prior trend with fixed scales and its exact posterior mean."""
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    y = np.sin(t / 4.0) * 3 + rng.normal(0, sigma, n)
    spec = ModelSpec.from_data(y, Grid.regular_grid(n), k, Prior.NORMAL, NormalObs(), 1.0,
                               fixed_gamma=gamma, fixed_sigma=sigma)
    model = TrendModel(spec, y)
    Q = precision_matrix(k, n, spec.omega**2, gamma)
    A = Q + np.eye(n) / sigma**2
    mean = np.linalg.solve(A, Q @ np.full(n, spec.mu) + y / sigma**2)
    return model, mean, np.linalg.inv(A)
