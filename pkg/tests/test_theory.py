import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nwopt import theory
from nwopt.optimizer import build_tau_net
from nwopt.types import BoundParams, EpsilonOutOfRange, FeasibleBox


def params(**kw):
    base = dict(delta=0.05, tau=0.1, lipschitz_x=1.0, lipschitz_gamma=1.0, density_floor=1.0, diameter=1.0, d=1, p=1)
    base.update(kw)
    return BoundParams(**base)


@pytest.mark.parametrize("p, expected", [(1, 2.0), (2, math.pi), (3, 4.0 * math.pi / 3.0)])
def test_ball_volume_constant(p, expected):
    assert theory.ball_volume_constant(p) == pytest.approx(expected, rel=1e-14)


def test_ball_probability_floor_examples():
    assert theory.ball_probability_floor(1, 0.1, 1.0) == pytest.approx(0.2, rel=1e-15)
    assert theory.ball_probability_floor(2, 0.0, 3.0) == 0.0
    assert theory.ball_probability_floor(1, 10.0, 1.0) == 1.0


def test_ball_probability_matches_monte_carlo(rng):
    u = rng.random(400_000)
    hit = np.mean(np.abs(u - 0.5) <= 0.1)
    se = math.sqrt(0.2 * 0.8 / u.size)
    assert abs(hit - theory.ball_probability_floor(1, 0.1, 1.0)) < 4 * se


def test_failure_prob_examples():
    assert theory.generalization_failure_prob(10, 1, 0.1, 0.0, 1.0) == 1.0
    assert theory.generalization_failure_prob_raw(10, 1, 0.1, 0.0, 1.0) == 2.0
    value = theory.generalization_failure_prob(1000, 1, 0.1, 0.5, 1.0)
    # 1000 * 2 * 1 * 0.1 * 0.25 / 2 = 25
    assert value == pytest.approx(2.0 * math.exp(-25.0), rel=1e-12)
    assert value == pytest.approx(2.78e-11, rel=1e-2)


@pytest.mark.parametrize("eps", [-0.1, 1.01])
def test_failure_prob_epsilon_range(eps):
    with pytest.raises(EpsilonOutOfRange):
        theory.generalization_failure_prob(10, 1, 0.1, eps, 1.0)


@settings(max_examples=200)
@given(
    st.integers(1, 10_000), st.integers(1, 4), st.floats(0.001, 1.0), st.floats(0.0, 1.0),
    st.floats(0.1, 3.0), st.sampled_from(["n", "h", "eps", "f"]), st.floats(1.0, 3.0),
)
def test_failure_prob_monotone(n, p, h, eps, f, which, factor):
    base = theory.generalization_failure_prob(n, p, h, eps, f)
    args = dict(n=n, p=p, h=h, epsilon=eps, density_floor=f)
    if which == "n":
        args["n"] = int(n * factor) + 1
    elif which == "h":
        args["h"] = h * factor
    elif which == "eps":
        args["epsilon"] = min(1.0, eps * factor)
    else:
        args["density_floor"] = f * factor
    assert theory.generalization_failure_prob(**args) <= base


def test_covering_number_examples():
    assert theory.covering_number(1.0, 0.1, 2) == pytest.approx(441.0)
    assert theory.covering_number(1.0, 0.25, 1) == pytest.approx(9.0)
    assert theory.covering_number(1.0, 2.0, 3) == 1.0
    assert theory.covering_number(1.0, 1.0, 1, mode="big_o") == 1.0
    assert theory.covering_number(2.0, 0.5, 2, 3.0, mode="big_o") == pytest.approx(48.0)
    assert theory.covering_number(1.0, 0.1, 5, 100.0, mode="explicit") == 100.0


@pytest.mark.parametrize("side, tau, d", [(1 / math.sqrt(2), 0.1, 2), (1.0, 0.25, 1), (1 / math.sqrt(3), 0.05, 3)])
def test_covering_number_bounds_constructed_grid(side, tau, d):
    # a unit-diameter cube; its explicit grid net must not exceed (1 + 2D/tau)^d
    box = FeasibleBox([0.0] * d, [side] * d)
    net = build_tau_net(box, tau)
    assert net.size <= theory.covering_number(box.diameter(), tau, d)


def test_optimal_bandwidth_example():
    bp = params(delta=0.05, covering_mode="explicit", covering_constant=100.0)
    h = theory.optimal_bandwidth(1000, bp)
    assert h == pytest.approx((4000.0 / math.log(4000.0)) ** (-1.0 / 3.0), rel=1e-14)
    assert h == pytest.approx(0.1275, abs=5e-5)


def grid_minimizer(n, bp):
    grid = np.logspace(-4, 1, 2000)
    c = math.pi ** (bp.p / 2) / math.gamma(bp.p / 2 + 1)
    log_term = math.log(2 * theory.net_size(bp) / bp.delta)
    g = 2 * bp.lipschitz_gamma * grid + 2 * np.sqrt(2 * log_term / (n * c * bp.density_floor * grid**bp.p))
    return grid[np.argmin(g)]


def test_optimal_bandwidth_is_grid_minimizer():
    bp = params(delta=0.05, covering_mode="explicit", covering_constant=100.0)
    assert theory.optimal_bandwidth(1000, bp) == pytest.approx(grid_minimizer(1000, bp), rel=0.01)


@pytest.mark.parametrize("p", [1, 2, 3, 5])
def test_bandwidth_doubling(p):
    bp = params(p=p)
    ratio = theory.optimal_bandwidth(2000, bp) / theory.optimal_bandwidth(1000, bp)
    assert ratio == pytest.approx(2.0 ** (-1.0 / (p + 2)), rel=1e-12)


def test_bandwidth_shrinks_slower_in_higher_dimension():
    n = 10**6
    assert theory.optimal_bandwidth(n, params(p=2)) > theory.optimal_bandwidth(n, params(p=1))


def test_suboptimality_terms():
    bp = params(tau=0.05)
    b = theory.suboptimality_bound(5000, bp)
    assert b.discretization_term == pytest.approx(0.2)
    assert b.total == b.statistical_term + b.discretization_term
    h = b.optimal_bandwidth
    assert b.statistical_term == pytest.approx(theory.bandwidth_objective(h, 5000, bp), rel=1e-10)
    far = theory.suboptimality_bound(10**15, bp)
    assert far.total - far.discretization_term < 1e-3


def test_sample_complexity_example():
    bp = params()
    # independent arithmetic: 2^(2p+3) L^p (p+2)^(p+2) log(2 * 81 / delta) / (p^p eps^(p+2) c f)
    expected = math.ceil(32 * 27 * math.log(2 * 81 / 0.05) / (0.2**3 * 2.0))
    assert expected == 436500
    assert theory.sample_complexity(0.2, 0.05, bp) == expected


def test_sample_complexity_halving_eps():
    bp = params()
    a = theory.sample_complexity_raw(0.2, 0.05, bp)
    b = theory.sample_complexity_raw(0.1, 0.05, bp)
    log_ratio = math.log(2 * 161 / 0.05) / math.log(2 * 81 / 0.05)
    assert b / a == pytest.approx(2.0**3 * log_ratio, rel=1e-12)


def test_sample_complexity_monotone_in_density_floor():
    values = [theory.sample_complexity(0.2, 0.05, params(density_floor=f)) for f in (0.5, 1.0, 2.0)]
    assert values[0] >= values[1] >= values[2]
