import math

import numpy as np
import pytest

from nwopt.problems import (
    GeneratorSpec,
    make_constant_problem,
    make_newsvendor,
    sample_dataset,
    true_conditional_loss,
)
from nwopt.types import InvalidGenerator


def test_generator_rejects_leaky_parameters():
    with pytest.raises(InvalidGenerator):
        GeneratorSpec(p=1, alpha=0.1, beta=0.4, half_width=0.2)
    with pytest.raises(InvalidGenerator):
        GeneratorSpec(p=1, alpha=0.3, beta=0.6, half_width=0.2)
    with pytest.raises(InvalidGenerator):
        make_newsvendor(1, gen=GeneratorSpec(p=1, beta=0.0))


def test_declared_constants():
    prob = make_newsvendor(4)
    assert prob.spec.loss.lipschitz_x == 1.0
    assert prob.spec.loss.lipschitz_gamma == pytest.approx(0.4 / 2.0)
    assert prob.spec.density_floor == 1.0


def test_symmetric_optimum_is_median():
    prob = make_newsvendor(2)
    g = np.array([0.2, 0.6])
    x_star, _ = prob.oracle.true_optimum(g)
    assert x_star[0] == pytest.approx(0.3 + 0.4 * 0.4)


def test_asymmetric_optimum_is_quantile(rng):
    prob = make_newsvendor(1, cu=3.0, co=1.0)
    g = np.array([0.5])
    x_star, _ = prob.oracle.true_optimum(g)
    assert x_star[0] == pytest.approx(0.3 + 0.4 * 0.5 + 0.5 * 0.2)
    xi = 0.5 + rng.uniform(-0.2, 0.2, 10**6)
    assert np.quantile(xi, 0.75) == pytest.approx(x_star[0], abs=2e-3)


def test_minimum_value_is_half_width_over_two():
    prob = make_newsvendor(1)
    g = np.array([0.25])
    x_star, value = prob.oracle.true_optimum(g)
    w = prob.gen.half_width
    assert value == pytest.approx(w / 2, rel=1e-14)
    assert prob.oracle.conditional_mean_loss_quadrature(x_star, g) == pytest.approx(w / 2, abs=1e-10)


def test_linear_regime_above_support():
    prob = make_newsvendor(1, cu=1.0, co=2.0)
    g = np.array([0.5])
    m = 0.5
    x = 0.95
    expected = 2.0 * (x - m) / 2.0
    assert true_conditional_loss(prob.oracle, [x], g) == pytest.approx(expected, rel=1e-14)
    assert prob.oracle.conditional_mean_loss_quadrature([x], g) == pytest.approx(expected, abs=1e-10)


def test_point_mass_limit():
    gen = GeneratorSpec(p=1, alpha=0.3, beta=0.4, half_width=0.0)
    prob = make_newsvendor(1, cu=1.0, co=3.0, gen=gen)
    g = np.array([0.5])
    assert prob.oracle.conditional_mean_loss([0.7], g) == pytest.approx(0.2)
    assert prob.oracle.conditional_mean_loss([0.4], g) == pytest.approx(0.1 / 3.0)


def test_closed_form_matches_quadrature(rng):
    for cu, co in ((1.0, 1.0), (3.0, 1.0), (0.5, 2.0)):
        prob = make_newsvendor(2, cu, co)
        xs = rng.random(10_000 // 3 + 1)
        gs = rng.random((xs.size, 2))
        for x, g in zip(xs, gs):
            exact = prob.oracle.conditional_mean_loss([x], g)
            assert abs(exact - prob.oracle.conditional_mean_loss_quadrature([x], g)) <= 1e-8


def test_rows_matches_scalar(rng):
    prob = make_newsvendor(3, 2.0, 1.0)
    gs = rng.random((500, 3))
    for x in (0.0, 0.31, 0.5, 0.77, 1.0):
        rows = prob.oracle.conditional_mean_loss_rows([x], gs)
        scalar = [prob.oracle.conditional_mean_loss([x], g) for g in gs]
        np.testing.assert_allclose(rows, scalar, rtol=0, atol=1e-15)


def test_true_optimum_beats_fine_grid(rng):
    prob = make_newsvendor(1, 1.0, 4.0)
    grid = np.linspace(0.0, 1.0, 10_001)
    for g in rng.random((20, 1)):
        _, value = prob.oracle.true_optimum(g)
        grid_values = [prob.oracle.conditional_mean_loss([x], g) for x in grid]
        assert value <= min(grid_values) + 1e-15


@pytest.mark.parametrize("p", [1, 3])
def test_lipschitz_gamma_contract(rng, p):
    prob = make_newsvendor(p, 2.0, 1.0)
    lg = prob.spec.loss.lipschitz_gamma
    a = rng.random((10**5, p))
    b = rng.random((10**5, p))
    dist = np.linalg.norm(a - b, axis=1)
    for x in (0.1, 0.5, 0.9):
        ea = prob.oracle.conditional_mean_loss_rows([x], a)
        eb = prob.oracle.conditional_mean_loss_rows([x], b)
        assert np.all(np.abs(ea - eb) <= lg * dist + 1e-15)


def test_lipschitz_x_contract(rng):
    prob = make_newsvendor(2, 1.0, 3.0)
    xs, ys = rng.random(2000), rng.random(2000)
    gs = rng.random((2000, 2))
    for x, y, g in zip(xs, ys, gs):
        diff = abs(prob.oracle.conditional_mean_loss([x], g) - prob.oracle.conditional_mean_loss([y], g))
        assert diff <= prob.spec.loss.lipschitz_x * abs(x - y) + 1e-15


def test_range_contract(rng):
    prob = make_newsvendor(2, 5.0, 0.5)
    data = sample_dataset(prob.gen, 50_000, 11)
    assert data.outcomes.min() >= 0.0 and data.outcomes.max() <= 1.0
    assert data.covariates.min() >= 0.0 and data.covariates.max() <= 1.0
    losses = prob.spec.loss.grid(rng.random((50, 1)), data.outcomes)
    assert losses.min() >= 0.0 and losses.max() <= 1.0


def test_single_draw_in_range():
    gen = GeneratorSpec(p=3)
    data = sample_dataset(gen, 1, 42)
    assert data.n == 1 and data.p == 3
    assert np.all((0 <= data.covariates) & (data.covariates <= 1))
    assert 0 <= data.outcomes[0, 0] <= 1


def test_sampling_is_reproducible():
    gen = GeneratorSpec(p=2)
    a, b = sample_dataset(gen, 1000, 5), sample_dataset(gen, 1000, 5)
    assert a.covariates.tobytes() == b.covariates.tobytes()
    assert a.outcomes.tobytes() == b.outcomes.tobytes()
    c = sample_dataset(gen, 1000, 6)
    assert c.outcomes.tobytes() != a.outcomes.tobytes()


def test_outcome_mean_law_of_large_numbers():
    gen = GeneratorSpec(p=1)
    n = 10**6
    xi = sample_dataset(gen, n, 99).outcomes[:, 0]
    # Var = beta^2/12 + w^2/3 for gamma ~ U[0,1], noise ~ U[-w, w]
    sd = math.sqrt(0.4**2 / 12 + 0.2**2 / 3)
    assert abs(xi.mean() - (0.3 + 0.4 / 2)) <= 3 * sd / math.sqrt(n)


def test_constant_problem():
    prob = make_constant_problem(1, 0.3)
    assert prob.oracle.true_optimum([0.2])[1] == 0.3
    assert prob.spec.loss.evaluate([0.5], np.zeros((4, 1))).tolist() == [0.3] * 4
