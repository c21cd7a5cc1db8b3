"""Stochastic proximal methods with arbitrary sampling for non-convex sparse learning."""
from ._backend import BACKEND
from .problem import (
    DatasetInstance,
    LossConstants,
    grad_full,
    grad_single,
    loss_constants,
    loss_single,
    loss_value,
)
from .regularizers import Regularizer, prox, prox_oracle_1d, reg_value
from .sampling import (
    SamplingScheme,
    cauchy_ratio,
    draw,
    make_independent_optimal,
    make_uniform,
    pairwise_matrix,
    variance_bound,
    weighted_estimate,
)
from .optimizers import (
    OptimizerConfig,
    RunReport,
    TraceRecord,
    default_stepsize,
    prox_sarah_as,
    prox_sgd_as,
    prox_spider_as,
    q_constant,
    q_prime_constant,
    run,
    stationarity_residual,
)

__version__ = "0.1.0"
