"""Contextual stochastic optimization with the spherical-kernel Nadaraya-Watson estimator."""

from .estimator import Estimate, NeighborSet, neighbors, nw_conditional_mean_surrogate, nw_estimate
from .optimizer import SolveResult, TauNet, build_tau_net, solve_nw
from .problems import GeneratorSpec, SyntheticProblem, make_newsvendor, sample_dataset, true_conditional_loss
from .theory import (
    ball_probability_floor,
    ball_volume_constant,
    covering_number,
    generalization_failure_prob,
    optimal_bandwidth,
    sample_complexity,
    suboptimality_bound,
)
from .types import (
    BoundParams,
    Dataset,
    DimensionMismatch,
    FeasibleBox,
    LossModel,
    NWOptError,
    ProblemSpec,
    validate_dataset,
)

__version__ = "0.1.0"
