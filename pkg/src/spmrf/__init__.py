"""Shrinkage-prior Markov random field trend smoothing with a NUTS sampler."""
from .grid import Grid, difference, scale_factors
from .model import (
    BinomialObs,
    Formulation,
    ModelSpec,
    NormalObs,
    PoissonObs,
    Prior,
    TrendModel,
    default_theta1_prior,
    log_posterior_hierarchical,
    log_posterior_marginal,
)

__version__ = "0.1.0"
