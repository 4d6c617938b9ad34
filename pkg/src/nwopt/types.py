"""Domain types shared across the package.

All types validate their invariants at construction and are immutable
afterwards; arrays are stored as read-only copies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray


class NWOptError(ValueError):
    """Base class for every validation error raised by nwopt."""


class DimensionMismatch(NWOptError):
    pass


class NonFiniteEntry(NWOptError):
    pass


class InvalidParameter(NWOptError):
    pass


class EpsilonOutOfRange(NWOptError):
    pass


class DegenerateBound(NWOptError):
    pass


class NetTooLarge(NWOptError):
    pass


class InvalidGenerator(NWOptError):
    pass


def _frozen(a: NDArray) -> NDArray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _positive_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise InvalidParameter(f"{name} must be positive and finite, got {value!r}")
    return value


def _positive_int(name: str, value: int) -> int:
    if isinstance(value, bool) or int(value) != value or int(value) < 1:
        raise InvalidParameter(f"{name} must be a positive integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class Dataset:
    """Paired observations: covariates (n x p) and outcomes (n x q)."""

    covariates: NDArray[np.float64]
    outcomes: NDArray[np.float64]

    def __post_init__(self):
        cov = np.asarray(self.covariates, dtype=np.float64)
        out = np.asarray(self.outcomes, dtype=np.float64)
        if cov.ndim == 1:
            cov = cov[:, None]
        if out.ndim == 1:
            out = out[:, None]
        if cov.ndim != 2 or out.ndim != 2:
            raise DimensionMismatch("covariates and outcomes must be 2-D")
        if cov.shape[0] != out.shape[0]:
            raise DimensionMismatch(
                f"covariates have {cov.shape[0]} rows but outcomes have {out.shape[0]}"
            )
        if cov.shape[0] < 1:
            raise DimensionMismatch("a dataset needs at least one observation")
        if cov.shape[1] < 1 or out.shape[1] < 1:
            raise DimensionMismatch("p and q must both be at least 1")
        for label, arr in (("covariates", cov), ("outcomes", out)):
            bad = np.argwhere(~np.isfinite(arr))
            if bad.size:
                r, c = bad[0]
                raise NonFiniteEntry(f"{label} has a non-finite entry at row {r + 1}, column {c + 1}")
        object.__setattr__(self, "covariates", _frozen(cov))
        object.__setattr__(self, "outcomes", _frozen(out))

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    @property
    def q(self) -> int:
        return self.outcomes.shape[1]


def validate_dataset(raw, p: int, q: int) -> Dataset:
    """Split a raw ``n x (p+q)`` matrix into covariates and outcomes."""
    p = _positive_int("p", p)
    q = _positive_int("q", q)
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] < 1:
        raise DimensionMismatch("raw data must be a non-empty 2-D matrix")
    if raw.shape[1] != p + q:
        raise DimensionMismatch(f"expected {p + q} columns (p={p}, q={q}), got {raw.shape[1]}")
    return Dataset(raw[:, :p], raw[:, p:])


@dataclass(frozen=True)
class LossModel:
    """A loss with values in [0, 1] and declared Lipschitz constants.

    ``evaluate(x, xi)`` takes a decision of shape (d,) and outcomes of shape
    (k, q) and returns the k losses. ``evaluate_grid`` is an optional fast path
    taking decisions (m, d) and returning an (m, k) matrix.
    """

    evaluate: Callable[[NDArray, NDArray], NDArray]
    lipschitz_x: float
    lipschitz_gamma: float
    name: str
    evaluate_grid: Optional[Callable[[NDArray, NDArray], NDArray]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lipschitz_x", _positive_finite("lipschitz_x", self.lipschitz_x))
        object.__setattr__(
            self, "lipschitz_gamma", _positive_finite("lipschitz_gamma", self.lipschitz_gamma)
        )
        if not callable(self.evaluate):
            raise InvalidParameter("evaluate must be callable")

    def grid(self, decisions: NDArray, outcomes: NDArray) -> NDArray:
        """Loss matrix of shape (len(decisions), len(outcomes))."""
        decisions = np.atleast_2d(np.asarray(decisions, dtype=np.float64))
        outcomes = np.atleast_2d(np.asarray(outcomes, dtype=np.float64))
        if self.evaluate_grid is not None:
            return self.evaluate_grid(decisions, outcomes)
        out = np.empty((decisions.shape[0], outcomes.shape[0]))
        for r, x in enumerate(decisions):
            out[r] = self.evaluate(x, outcomes)
        return out


@dataclass(frozen=True)
class FeasibleBox:
    lower: NDArray[np.float64]
    upper: NDArray[np.float64]

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size == 0:
            raise DimensionMismatch("lower and upper must be vectors of equal length >= 1")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise NonFiniteEntry("box bounds must be finite")
        if not np.all(lo < hi):
            raise InvalidParameter("every coordinate needs lower < upper")
        if not math.isfinite(float(np.linalg.norm(hi - lo))):
            raise InvalidParameter("box diameter overflows")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    def diameter(self) -> float:
        return math.sqrt(float(np.sum((self.upper - self.lower) ** 2)))

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))


@dataclass(frozen=True)
class ProblemSpec:
    loss: LossModel
    feasible: FeasibleBox
    density_floor: float
    covariate_dim: int
    outcome_dim: int

    def __post_init__(self):
        object.__setattr__(self, "density_floor", _positive_finite("density_floor", self.density_floor))
        object.__setattr__(self, "covariate_dim", _positive_int("covariate_dim", self.covariate_dim))
        object.__setattr__(self, "outcome_dim", _positive_int("outcome_dim", self.outcome_dim))

    def check_dataset(self, data: Dataset) -> None:
        if data.p != self.covariate_dim or data.q != self.outcome_dim:
            raise DimensionMismatch(
                f"dataset has (p={data.p}, q={data.q}), problem expects "
                f"(p={self.covariate_dim}, q={self.outcome_dim})"
            )


COVERING_MODES = ("ball", "big_o", "explicit")


@dataclass(frozen=True)
class BoundParams:
    """Inputs shared by the bandwidth, suboptimality and sample-complexity formulas.

    ``covering_mode`` chooses how the net cardinality is computed:
    ``"ball"`` gives ``covering_constant * (1 + 2D/tau)^d``, ``"big_o"`` gives
    ``covering_constant * max(1, D/tau)^d`` and ``"explicit"`` uses
    ``covering_constant`` itself as the cardinality of a user-built net.
    """

    delta: float
    tau: float
    lipschitz_x: float
    lipschitz_gamma: float
    density_floor: float
    diameter: float
    d: int
    p: int
    covering_constant: float = 1.0
    covering_mode: str = "ball"

    def __post_init__(self):
        delta = float(self.delta)
        if not 0.0 < delta < 1.0:
            raise InvalidParameter(f"delta must lie in (0, 1), got {delta!r}")
        object.__setattr__(self, "delta", delta)
        for name in ("tau", "lipschitz_x", "lipschitz_gamma", "density_floor", "diameter"):
            object.__setattr__(self, name, _positive_finite(name, getattr(self, name)))
        object.__setattr__(self, "d", _positive_int("d", self.d))
        object.__setattr__(self, "p", _positive_int("p", self.p))
        const = float(self.covering_constant)
        if not math.isfinite(const) or const < 1.0:
            raise InvalidParameter(f"covering_constant must be >= 1, got {const!r}")
        object.__setattr__(self, "covering_constant", const)
        if self.covering_mode not in COVERING_MODES:
            raise InvalidParameter(f"covering_mode must be one of {COVERING_MODES}")

    @classmethod
    def from_problem(cls, problem: ProblemSpec, delta: float, tau: float, **kwargs) -> "BoundParams":
        return cls(
            delta=delta,
            tau=tau,
            lipschitz_x=problem.loss.lipschitz_x,
            lipschitz_gamma=problem.loss.lipschitz_gamma,
            density_floor=problem.density_floor,
            diameter=problem.feasible.diameter(),
            d=problem.feasible.d,
            p=problem.covariate_dim,
            **kwargs,
        )

    def replace(self, **changes) -> "BoundParams":
        from dataclasses import replace

        return replace(self, **changes)
