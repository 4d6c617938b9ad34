"""Spherical-kernel Nadaraya-Watson estimator of a conditional expected loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import _accel
from .types import Dataset, DimensionMismatch, InvalidParameter, LossModel


@dataclass(frozen=True)
class NeighborSet:
    indices: NDArray[np.intp]

    @property
    def count(self) -> int:
        return int(self.indices.shape[0])


@dataclass(frozen=True)
class Estimate:
    """Estimator output. ``empty_neighborhood`` marks the zero-by-definition case."""

    value: float
    neighbor_count: int
    empty_neighborhood: bool

    def __float__(self) -> float:
        return self.value


def _query_vector(data: Dataset, gamma_query) -> NDArray:
    g = np.atleast_1d(np.asarray(gamma_query, dtype=np.float64))
    if g.ndim != 1 or g.shape[0] != data.p:
        raise DimensionMismatch(f"query has length {g.size}, dataset has p={data.p}")
    return g


def _check_bandwidth(h: float) -> float:
    h = float(h)
    if not h > 0 or not np.isfinite(h):
        raise InvalidParameter(f"bandwidth must be positive and finite, got {h!r}")
    return h


def neighbors(data: Dataset, gamma_query, h: float) -> NeighborSet:
    """Indices i with ||gamma_query - gamma_i|| <= h, in increasing order."""
    g = _query_vector(data, gamma_query)
    h = _check_bandwidth(h)
    mask = _accel.ball_mask(data.covariates, g, h)
    return NeighborSet(np.flatnonzero(mask))


def average_over(values: NDArray) -> float:
    """Unweighted mean with left-to-right summation; 0.0 for an empty input."""
    k = values.shape[0]
    if k == 0:
        return 0.0
    return _accel.sequential_sum(values) / k


def nw_estimate(data: Dataset, loss: LossModel, x, gamma_query, h: float) -> Estimate:
    nb = neighbors(data, gamma_query, h)
    if nb.count == 0:
        return Estimate(0.0, 0, True)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    values = np.asarray(loss.evaluate(x, data.outcomes[nb.indices]), dtype=np.float64)
    return Estimate(average_over(values), nb.count, False)


def nw_conditional_mean_surrogate(data: Dataset, true_oracle, x, gamma_query, h: float) -> Estimate:
    """Average of the true conditional mean loss at the sampled neighbor covariates.

    This is the estimator's mean given the covariate sample; it splits the
    estimation error into a bias part and a deviation part.
    """
    nb = neighbors(data, gamma_query, h)
    if nb.count == 0:
        return Estimate(0.0, 0, True)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    values = np.asarray(true_oracle.conditional_mean_loss_rows(x, data.covariates[nb.indices]), dtype=np.float64)
    return Estimate(average_over(values), nb.count, False)
