"""Closed-form finite-sample bounds for the spherical-kernel NW approach.

Logarithms are natural. Probabilities are clamped to [0, 1]; the raw values
are available through the ``*_raw`` helpers and on the result objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .types import BoundParams, DegenerateBound, EpsilonOutOfRange, InvalidParameter


@dataclass(frozen=True)
class GeneralizationBound:
    bias_term: float
    deviation_term: float
    failure_probability: float
    raw_failure_probability: float

    @property
    def threshold(self) -> float:
        return self.bias_term + self.deviation_term


@dataclass(frozen=True)
class SuboptimalityBound:
    statistical_term: float
    discretization_term: float
    total: float
    optimal_bandwidth: float
    net_size: float
    covering_mode: str


def ball_volume_constant(p: int) -> float:
    """Volume of the Euclidean unit ball in R^p."""
    if p < 1:
        raise InvalidParameter("p must be >= 1")
    return math.pi ** (p / 2) / math.gamma(p / 2 + 1)


def ball_probability_floor(p: int, h: float, density_floor: float) -> float:
    """Lower bound min(1, c f h^p) on the probability of landing in a radius-h ball."""
    if h < 0 or density_floor <= 0:
        raise InvalidParameter("need h >= 0 and density_floor > 0")
    return min(1.0, ball_volume_constant(p) * density_floor * h**p)


def generalization_failure_prob_raw(n: int, p: int, h: float, epsilon: float, density_floor: float) -> float:
    if not 0.0 <= epsilon <= 1.0:
        raise EpsilonOutOfRange(f"epsilon must lie in [0, 1], got {epsilon!r}")
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    c = ball_volume_constant(p)
    return 2.0 * math.exp(-n * c * density_floor * h**p * epsilon**2 / 2.0)


def generalization_failure_prob(n: int, p: int, h: float, epsilon: float, density_floor: float) -> float:
    """P(|E - E_hat| > L_gamma h + epsilon) <= min(1, 2 exp(-n c f h^p eps^2 / 2))."""
    return min(1.0, generalization_failure_prob_raw(n, p, h, epsilon, density_floor))


def generalization_bound(
    n: int, p: int, h: float, epsilon: float, density_floor: float, lipschitz_gamma: float
) -> GeneralizationBound:
    raw = generalization_failure_prob_raw(n, p, h, epsilon, density_floor)
    return GeneralizationBound(
        bias_term=lipschitz_gamma * h,
        deviation_term=float(epsilon),
        failure_probability=min(1.0, raw),
        raw_failure_probability=raw,
    )


def covering_number(
    D: float, tau: float, d: int, covering_constant: float = 1.0, mode: str = "ball"
) -> float:
    """Cardinality of a tau-net for a set of diameter D in R^d.

    A single point covers the set once tau >= D, whatever the mode.
    """
    if tau <= 0 or D <= 0:
        raise InvalidParameter("D and tau must be positive")
    if mode == "explicit":
        return float(covering_constant)
    if tau >= D:
        return float(covering_constant)
    if mode == "ball":
        return covering_constant * (1.0 + 2.0 * D / tau) ** d
    if mode == "big_o":
        return covering_constant * (D / tau) ** d
    raise InvalidParameter(f"unknown covering mode {mode!r}")


def net_size(params: BoundParams, tau: float | None = None) -> float:
    tau = params.tau if tau is None else tau
    return covering_number(params.diameter, tau, params.d, params.covering_constant, params.covering_mode)


def _log_term(params: BoundParams, tau: float | None = None, delta: float | None = None) -> float:
    delta = params.delta if delta is None else delta
    arg = 2.0 * net_size(params, tau) / delta
    if arg <= 1.0:
        raise DegenerateBound(f"2|X_tau|/delta = {arg!r} must exceed 1")
    return math.log(arg)


def bandwidth_objective(h: float, n: int, params: BoundParams) -> float:
    """Two-term error bound 2 L_gamma h + 2 sqrt(2 log(2N/delta) / (n c f h^p))."""
    c = ball_volume_constant(params.p)
    log_term = _log_term(params)
    return 2.0 * params.lipschitz_gamma * h + 2.0 * math.sqrt(
        2.0 * log_term / (n * c * params.density_floor * h**params.p)
    )


def optimal_bandwidth(n: int, params: BoundParams) -> float:
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    p = params.p
    c = ball_volume_constant(p)
    base = 2.0 * params.lipschitz_gamma**2 * n * c * params.density_floor / (p**2 * _log_term(params))
    return base ** (-1.0 / (p + 2))


def suboptimality_bound(n: int, params: BoundParams) -> SuboptimalityBound:
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    p = params.p
    c = ball_volume_constant(p)
    statistical = (
        2.0
        * params.lipschitz_gamma ** (p / (p + 2))
        * (p + 2)
        / (4.0 * p**p) ** (1.0 / (p + 2))
        * (2.0 * _log_term(params) / (n * c * params.density_floor)) ** (1.0 / (p + 2))
    )
    discretization = 4.0 * params.lipschitz_x * params.tau
    return SuboptimalityBound(
        statistical_term=statistical,
        discretization_term=discretization,
        total=statistical + discretization,
        optimal_bandwidth=optimal_bandwidth(n, params),
        net_size=net_size(params),
        covering_mode=params.covering_mode,
    )


def sample_complexity_raw(epsilon: float, delta: float, params: BoundParams) -> float:
    if not 0.0 < epsilon < 1.0:
        raise EpsilonOutOfRange(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not 0.0 < delta < 1.0:
        raise InvalidParameter(f"delta must lie in (0, 1), got {delta!r}")
    p = params.p
    c = ball_volume_constant(p)
    tau = epsilon / (8.0 * params.lipschitz_x)
    log_term = _log_term(params, tau=tau, delta=delta)
    numerator = 2.0 ** (2 * p + 3) * params.lipschitz_gamma**p * (p + 2) ** (p + 2) * log_term
    return numerator / (p**p * epsilon ** (p + 2) * c * params.density_floor)


def sample_complexity(epsilon: float, delta: float, params: BoundParams) -> int:
    """Smallest integer n meeting the sufficient condition for an epsilon gap w.p. 1 - delta.

    The net resolution is fixed at tau = epsilon / (8 L_x); ``params.tau`` and
    ``params.delta`` are ignored.
    """
    return int(math.ceil(sample_complexity_raw(epsilon, delta, params)))
