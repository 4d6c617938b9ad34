import numpy as np
import pytest

from nwopt import experiments as ex
from nwopt.problems import make_constant_problem
from nwopt.types import BoundParams, EpsilonOutOfRange, InvalidParameter


def test_trial_seeds_are_distinct_and_stable():
    seeds = [ex.trial_seed(7, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert seeds == [ex.trial_seed(7, i) for i in range(1000)]
    assert ex.trial_seed(8, 0) != seeds[0]


def test_clopper_pearson_upper():
    # zero successes: 1 - (1 - conf)^(1/n)
    assert ex.clopper_pearson_upper(0, 100) == pytest.approx(1 - 0.01 ** (1 / 100), rel=1e-10)
    assert ex.clopper_pearson_upper(100, 100) == 1.0
    assert ex.clopper_pearson_upper(5, 100) > 0.05


def test_allowed_violations():
    assert ex.allowed_violations(1e-12, 2000) == 0
    assert ex.allowed_violations(1.0, 50) == 50
    assert 50 < ex.allowed_violations(0.1, 500) < 80


def test_fit_slope_exact_power_law():
    ns = [2**k for k in range(8, 15)]
    assert ex.fit_loglog_slope(ns, [3.0 * n ** (-0.25) for n in ns]) == pytest.approx(-0.25, abs=1e-12)


def test_coverage_epsilon_one_never_violates(newsvendor):
    rep = ex.run_coverage(newsvendor, [0.5], [0.5], 50, 0.05, 1.0, 200, 1)
    assert rep.violations == 0 and rep.empirical_violation_rate == 0.0
    assert rep.passed and len(rep.records) == 200


def test_coverage_reports_empty_neighborhoods(newsvendor):
    # a small ball at the edge of the covariate support with few samples
    rep = ex.run_coverage(newsvendor, [0.5], [0.0], 20, 0.01, 0.3, 200, 3)
    assert rep.empty_neighborhood_rate > 0
    truth = newsvendor.oracle.conditional_mean_loss([0.5], [0.0])
    for r in rep.records:
        if r.empty_neighborhood:
            assert r.abs_error == pytest.approx(truth, abs=0)


def test_coverage_validation(newsvendor):
    with pytest.raises(EpsilonOutOfRange):
        ex.run_coverage(newsvendor, [0.5], [0.5], 50, 0.1, 1.5, 200, 1)
    with pytest.raises(InvalidParameter):
        ex.run_coverage(newsvendor, [0.5], [0.5], 50, 0.1, 0.5, 99, 1)


def test_bias_mad_per_trial_invariants(newsvendor):
    rep = ex.run_bias_mad(newsvendor, [0.5], [0.2], 100, 0.05, 300, 5)
    lg = newsvendor.spec.loss.lipschitz_gamma
    for r in rep.records:
        assert r.abs_error <= r.bias_component + r.mad_component + 1e-12
        if r.empty_neighborhood:
            assert r.bias_component <= 1.0
        else:
            assert r.bias_component <= lg * 0.05 + 1e-12
    assert rep.passed


def test_bias_mad_empty_trials_carry_full_error(newsvendor):
    rep = ex.run_bias_mad(newsvendor, [0.5], [1.0], 10, 0.005, 200, 2)
    empties = [r for r in rep.records if r.empty_neighborhood]
    assert empties
    truth = newsvendor.oracle.conditional_mean_loss([0.5], [1.0])
    assert all(r.bias_component == truth and r.mad_component == 0.0 for r in empties)


def test_mad_shrinks_with_n(newsvendor):
    means = []
    for n in (500, 2000, 8000):
        rep = ex.run_bias_mad(newsvendor, [0.5], [0.5], n, 0.1, 300, 11)
        means.append(rep.summary["mean_mad_component"])
    assert means[0] > means[1] > means[2]
    # roughly 1/sqrt(n p_h): each 4x step halves the deviation
    assert means[0] / means[2] == pytest.approx(4.0, rel=0.3)


def test_rate_report_structure(newsvendor):
    params = BoundParams.from_problem(newsvendor.spec, delta=0.1, tau=0.02)
    rep = ex.run_rate(newsvendor, [1.0], [0.5], [256, 1024, 4096], params, 40, 3)
    levels = rep.summary["levels"]
    assert [lv["n"] for lv in levels] == [256, 1024, 4096]
    assert all(lv["mean_abs_error"] <= 1.0 for lv in levels)
    assert rep.fitted_rate_slope < 0
    assert len(rep.records) == 120


def test_suboptimality_gaps(newsvendor):
    params = BoundParams.from_problem(newsvendor.spec, delta=0.1, tau=0.05)
    rep = ex.run_suboptimality(newsvendor, [0.3], 500, params, 60, 9)
    assert all(r.gap >= -1e-12 for r in rep.records)
    assert rep.passed


def test_constant_problem_has_zero_gap():
    prob = make_constant_problem(1, 0.4)
    params = BoundParams.from_problem(prob.spec, delta=0.1, tau=0.1)
    rep = ex.run_suboptimality(prob, [0.5], 200, params, 30, 1)
    assert all(r.gap == 0.0 for r in rep.records)


def test_reports_independent_of_worker_count(newsvendor, tmp_path):
    a = ex.run_coverage(newsvendor, [0.5], [0.4], 300, 0.1, 0.2, 120, 17, workers=1)
    b = ex.run_coverage(newsvendor, [0.5], [0.4], 300, 0.1, 0.2, 120, 17, workers=3)
    assert a.records_csv() == b.records_csv()
    assert a.to_json() == b.to_json()


def test_report_csv_columns(newsvendor):
    rep = ex.run_coverage(newsvendor, [0.5], [0.5], 100, 0.1, 0.5, 100, 1)
    lines = rep.records_csv().splitlines()
    assert lines[0].split(",") == ex.RECORD_COLUMNS
    assert len(lines) == 101
    first = lines[1].split(",")
    assert float(first[4]) == rep.records[0].abs_error
