"""Exhaustive minimization of the NW objective over a tau-net of the feasible box."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import _accel
from .estimator import neighbors
from .types import Dataset, FeasibleBox, InvalidParameter, NetTooLarge, ProblemSpec

DEFAULT_MAX_NET_POINTS = 10**7


@dataclass(frozen=True)
class TauNet:
    """Axis-aligned grid; every box point is within ``tau`` of some grid point.

    Rows of ``points`` are in lexicographic order of their coordinates.
    """

    points: NDArray[np.float64]
    tau: float
    spacing: float
    shape: tuple

    @property
    def size(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class SolveResult:
    x_hat: NDArray[np.float64]
    objective_value: float
    empty_neighborhood: bool
    net_size: int
    neighbor_count: int = 0


def build_tau_net(box: FeasibleBox, tau: float, max_points: int = DEFAULT_MAX_NET_POINTS) -> TauNet:
    tau = float(tau)
    if not tau > 0 or not math.isfinite(tau):
        raise InvalidParameter(f"tau must be positive and finite, got {tau!r}")
    d = box.d
    # a grid cell of side s has half-diagonal s*sqrt(d)/2 = tau
    spacing = 2.0 * tau / math.sqrt(d)
    counts = [int(math.ceil((hi - lo) / spacing)) + 1 for lo, hi in zip(box.lower, box.upper)]
    total = math.prod(counts)
    if total > max_points:
        raise NetTooLarge(f"tau-net would have {total} points (cap {max_points})")
    axes = [np.linspace(lo, hi, k) for lo, hi, k in zip(box.lower, box.upper, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    points.setflags(write=False)
    return TauNet(points=points, tau=tau, spacing=spacing, shape=tuple(counts))


def net_objectives(data: Dataset, problem: ProblemSpec, net: TauNet, indices: NDArray) -> NDArray:
    """NW estimate at every net point for a fixed, nonempty neighbor index set."""
    losses = problem.loss.grid(net.points, data.outcomes[indices])
    return _accel.row_sums(losses) / indices.shape[0]


def solve_nw(
    data: Dataset,
    problem: ProblemSpec,
    gamma_query,
    h: float,
    tau: float,
    net: TauNet | None = None,
    max_points: int = DEFAULT_MAX_NET_POINTS,
) -> SolveResult:
    """Minimize the NW estimate over the tau-net; ties go to the lexicographically first point."""
    problem.check_dataset(data)
    if net is None:
        net = build_tau_net(problem.feasible, tau, max_points)
    nb = neighbors(data, gamma_query, h)
    if nb.count == 0:
        return SolveResult(net.points[0].copy(), 0.0, True, net.size, 0)
    values = net_objectives(data, problem, net, nb.indices)
    # argmin returns the first minimum; rows are lexicographically sorted
    best = int(np.argmin(values))
    return SolveResult(net.points[best].copy(), float(values[best]), False, net.size, nb.count)

