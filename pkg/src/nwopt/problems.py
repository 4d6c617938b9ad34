"""Synthetic contextual problems with known conditional distributions.

Covariates are uniform on [0, 1]^p, so the covariate density floor is 1.
Outcomes follow an affine link on the covariate mean plus bounded uniform
noise, chosen so they never leave [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import _accel
from .types import (
    Dataset,
    FeasibleBox,
    InvalidGenerator,
    InvalidParameter,
    LossModel,
    ProblemSpec,
)


@dataclass(frozen=True)
class GeneratorSpec:
    """xi = alpha + beta * mean(gamma) + U[-half_width, half_width], gamma ~ U[0,1]^p."""

    p: int = 1
    alpha: float = 0.3
    beta: float = 0.4
    half_width: float = 0.2

    density_floor = 1.0

    def __post_init__(self):
        if isinstance(self.p, bool) or int(self.p) != self.p or self.p < 1:
            raise InvalidGenerator(f"p must be a positive integer, got {self.p!r}")
        vals = (self.alpha, self.beta, self.half_width)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidGenerator("generator parameters must be finite")
        if self.beta < 0 or self.half_width < 0:
            raise InvalidGenerator("beta and half_width must be non-negative")
        if self.alpha - self.half_width < 0 or self.alpha + self.beta + self.half_width > 1:
            raise InvalidGenerator(
                "outcomes could leave [0, 1]: need alpha - w >= 0 and alpha + beta + w <= 1"
            )

    def conditional_center(self, gamma) -> float:
        gamma = np.atleast_1d(np.asarray(gamma, dtype=np.float64))
        return self.alpha + self.beta * float(np.mean(gamma))


def sample_dataset(gen: GeneratorSpec, n: int, seed: int) -> Dataset:
    """Draw n i.i.d. pairs; the Philox counter-based stream makes this a pure function of seed."""
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    covariates = rng.random((n, gen.p))
    noise = rng.uniform(-gen.half_width, gen.half_width, size=n)
    outcomes = gen.alpha + gen.beta * covariates.mean(axis=1) + noise
    return Dataset(covariates, outcomes[:, None])


# -- newsvendor -----------------------------------------------------------------


@dataclass(frozen=True)
class NewsvendorLoss:
    """(cu (xi - x)_+ + co (x - xi)_+) / max(cu, co)."""

    cu: float
    co: float

    @property
    def scale(self) -> float:
        return max(self.cu, self.co)

    def __call__(self, x, xi):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
        return _accel.newsvendor_loss_grid(x[:1], xi[:, 0], self.cu, self.co, self.scale)[0]

    def grid(self, decisions, outcomes):
        return _accel.newsvendor_loss_grid(decisions[:, 0], outcomes[:, 0], self.cu, self.co, self.scale)


class TrueConditionalOracle:
    """Exact conditional expectation of the loss given gamma, and the true optimum."""

    def conditional_mean_loss(self, x, gamma) -> float:
        raise NotImplementedError

    def true_optimum(self, gamma) -> tuple[np.ndarray, float]:
        raise NotImplementedError

    def conditional_mean_loss_rows(self, x, gammas) -> np.ndarray:
        """conditional_mean_loss at x for every row of ``gammas``."""
        return np.array([self.conditional_mean_loss(x, g) for g in gammas], dtype=np.float64)


@dataclass(frozen=True)
class NewsvendorOracle(TrueConditionalOracle):
    gen: GeneratorSpec
    cu: float
    co: float

    @property
    def scale(self) -> float:
        return max(self.cu, self.co)

    def conditional_mean_loss(self, x, gamma) -> float:
        x = float(np.atleast_1d(x)[0])
        m = self.gen.conditional_center(gamma)
        w = self.gen.half_width
        t = x - m
        if w == 0.0:
            over, under = max(t, 0.0), max(-t, 0.0)
        elif t >= w:
            over, under = t, 0.0
        elif t <= -w:
            over, under = 0.0, -t
        else:
            over = (t + w) ** 2 / (4.0 * w)
            under = (w - t) ** 2 / (4.0 * w)
        return (self.cu * under + self.co * over) / self.scale

    def conditional_mean_loss_rows(self, x, gammas) -> np.ndarray:
        x = float(np.atleast_1d(x)[0])
        gammas = np.atleast_2d(np.asarray(gammas, dtype=np.float64))
        m = self.gen.alpha + self.gen.beta * gammas.mean(axis=1)
        w = self.gen.half_width
        t = x - m
        if w == 0.0:
            over, under = np.maximum(t, 0.0), np.maximum(-t, 0.0)
        else:
            inside = np.abs(t) < w
            tc = np.clip(t, -w, w)
            over = np.where(t >= w, t, np.where(inside, (tc + w) ** 2 / (4.0 * w), 0.0))
            under = np.where(t <= -w, -t, np.where(inside, (w - tc) ** 2 / (4.0 * w), 0.0))
        return (self.cu * under + self.co * over) / self.scale

    def conditional_mean_loss_quadrature(self, x, gamma) -> float:
        """Adaptive quadrature of the loss against the conditional outcome density."""
        x = float(np.atleast_1d(x)[0])
        m = self.gen.conditional_center(gamma)
        w = self.gen.half_width
        if w == 0.0:
            return self.conditional_mean_loss(x, gamma)
        loss = NewsvendorLoss(self.cu, self.co)

        def integrand(xi):
            return (self.cu * max(xi - x, 0.0) + self.co * max(x - xi, 0.0)) / loss.scale / (2.0 * w)

        kink = [x] if m - w < x < m + w else None
        value, _ = integrate.quad(integrand, m - w, m + w, points=kink, epsabs=1e-13, epsrel=1e-10)
        return value

    def true_optimum(self, gamma):
        q = self.cu / (self.cu + self.co)
        m = self.gen.conditional_center(gamma)
        x_star = min(1.0, max(0.0, m + self.gen.half_width * (2.0 * q - 1.0)))
        return np.array([x_star]), self.conditional_mean_loss(x_star, gamma)


def true_conditional_loss(oracle: TrueConditionalOracle, x, gamma) -> float:
    return oracle.conditional_mean_loss(x, gamma)


@dataclass(frozen=True)
class SyntheticProblem:
    """A problem together with its generator and ground-truth oracle."""

    spec: ProblemSpec
    oracle: TrueConditionalOracle
    gen: GeneratorSpec

    def __iter__(self):
        return iter((self.spec, self.oracle))


def make_newsvendor(p: int = 1, cu: float = 1.0, co: float = 1.0, gen: GeneratorSpec | None = None) -> SyntheticProblem:
    """Normalized single-item newsvendor on X = [0, 1].

    L_x = 1 because the normalized loss has slope at most 1 in x. The
    conditional mean depends on gamma only through alpha + beta * mean(gamma),
    whose gradient has norm beta / sqrt(p); the same slope-1 argument then
    gives L_gamma = beta / sqrt(p).
    """
    gen = GeneratorSpec(p=p) if gen is None else gen
    if gen.p != p:
        raise InvalidGenerator(f"generator has p={gen.p}, problem asked for p={p}")
    if not (cu > 0 and co > 0 and math.isfinite(cu) and math.isfinite(co)):
        raise InvalidParameter("cu and co must be positive and finite")
    if gen.beta == 0:
        raise InvalidGenerator("beta = 0 makes the covariates irrelevant and L_gamma zero")
    fn = NewsvendorLoss(float(cu), float(co))
    loss = LossModel(
        evaluate=fn,
        lipschitz_x=1.0,
        lipschitz_gamma=gen.beta / math.sqrt(p),
        name=f"newsvendor(cu={cu:g},co={co:g})",
        evaluate_grid=fn.grid,
    )
    spec = ProblemSpec(
        loss=loss,
        feasible=FeasibleBox([0.0], [1.0]),
        density_floor=gen.density_floor,
        covariate_dim=p,
        outcome_dim=1,
    )
    return SyntheticProblem(spec, NewsvendorOracle(gen, float(cu), float(co)), gen)


# -- constant loss (sanity problem) -------------------------------------------------


@dataclass(frozen=True)
class ConstantLoss:
    value: float

    def __call__(self, x, xi):
        xi = np.atleast_2d(xi)
        return np.full(xi.shape[0], self.value)


@dataclass(frozen=True)
class ConstantOracle(TrueConditionalOracle):
    value: float
    lower: tuple

    def conditional_mean_loss(self, x, gamma) -> float:
        return self.value

    def true_optimum(self, gamma):
        return np.array(self.lower), self.value


def make_constant_problem(p: int = 1, value: float = 0.5, gen: GeneratorSpec | None = None) -> SyntheticProblem:
    """Loss that ignores both decision and outcome; every decision is optimal."""
    gen = GeneratorSpec(p=p) if gen is None else gen
    if not 0.0 <= value <= 1.0:
        raise InvalidParameter("constant loss must lie in [0, 1]")
    loss = LossModel(ConstantLoss(float(value)), 1.0, 1.0, f"constant({value:g})")
    spec = ProblemSpec(loss, FeasibleBox([0.0], [1.0]), gen.density_floor, p, 1)
    return SyntheticProblem(spec, ConstantOracle(float(value), (0.0,)), gen)
