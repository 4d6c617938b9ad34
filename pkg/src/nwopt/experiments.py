"""Monte Carlo checks of the finite-sample bounds on synthetic problems.

Trial ``i`` draws its data from a seed derived from ``(base_seed, i)`` with
``numpy.random.SeedSequence`` spawn keys, so trials are independent of each
other and of execution order. Trials run in chunks on a process pool and are
merged by trial index, which makes every report independent of ``workers``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import theory
from .estimator import nw_conditional_mean_surrogate, nw_estimate
from .optimizer import build_tau_net, solve_nw
from .problems import SyntheticProblem, sample_dataset
from .types import BoundParams, InvalidParameter

CONFIDENCE = 0.99
TRIANGLE_TOL = 1e-12
RATE_WINDOW = 0.12


@dataclass
class TrialRecord:
    trial_index: int
    seed: int
    n: int
    h: float
    abs_error: float
    bias_component: float
    mad_component: float
    neighbor_count: int
    gap: Optional[float] = None
    bound_violated: bool = False

    @property
    def empty_neighborhood(self) -> bool:
        return self.neighbor_count == 0


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    records: list
    empirical_violation_rate: float
    violations: int
    theoretical_bound: float
    theoretical_bound_raw: float
    theoretical_formula: str
    binomial_upper_conf: float
    allowed_violations: int
    empty_neighborhood_rate: float
    fitted_rate_slope: Optional[float] = None
    summary: dict = field(default_factory=dict)
    assertions: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def aggregate(self) -> dict:
        out = asdict(self)
        del out["records"]
        out["trials"] = len(self.records)
        out["passed"] = self.passed
        return out

    def to_json(self) -> str:
        return json.dumps(self.aggregate(), indent=2, sort_keys=True) + "\n"

    def records_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for r in self.records:
            writer.writerow(
                [
                    r.trial_index,
                    r.seed,
                    r.n,
                    _fmt(r.h),
                    _fmt(r.abs_error),
                    _fmt(r.bias_component),
                    _fmt(r.mad_component),
                    r.neighbor_count,
                    int(r.empty_neighborhood),
                    "" if r.gap is None else _fmt(r.gap),
                    int(r.bound_violated),
                ]
            )
        return buf.getvalue()

    def write(self, out_dir: str, stem: str | None = None) -> tuple[str, str]:
        os.makedirs(out_dir, exist_ok=True)
        stem = stem or self.kind
        csv_path = os.path.join(out_dir, f"{stem}_trials.csv")
        json_path = os.path.join(out_dir, f"{stem}_report.json")
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.records_csv())
        with open(json_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_json())
        return csv_path, json_path


RECORD_COLUMNS = [
    "trial_index",
    "seed",
    "n",
    "h",
    "abs_error",
    "bias_component",
    "mad_component",
    "neighbor_count",
    "empty_neighborhood",
    "gap",
    "bound_violated",
]


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


# -- statistics -----------------------------------------------------------------


def trial_seed(base_seed: int, trial_index: int) -> int:
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(trial_index),))
    return int(ss.generate_state(1, np.uint64)[0])


def clopper_pearson_upper(k: int, trials: int, confidence: float = CONFIDENCE) -> float:
    """One-sided upper confidence bound on a binomial proportion."""
    if k >= trials:
        return 1.0
    return float(stats.beta.ppf(confidence, k + 1, trials - k))


def allowed_violations(rate: float, trials: int, confidence: float = CONFIDENCE) -> int:
    """Largest violation count consistent with a true rate of ``rate`` at the given confidence.

    A count above this would reject "violation probability <= rate" at level
    1 - confidence.
    """
    if rate >= 1.0:
        return trials
    return int(stats.binom.ppf(confidence, trials, rate))


def fit_loglog_slope(ns, errors) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(np.asarray(errors, dtype=float)), 1)
    return float(slope)


# -- trials ---------------------------------------------------------------------


def _estimation_trial(problem: SyntheticProblem, x, gamma_query, n, h, threshold, base_seed, index):
    seed = trial_seed(base_seed, index)
    data = sample_dataset(problem.gen, n, seed)
    truth = problem.oracle.conditional_mean_loss(x, gamma_query)
    est = nw_estimate(data, problem.spec.loss, x, gamma_query, h)
    surrogate = nw_conditional_mean_surrogate(data, problem.oracle, x, gamma_query, h)
    abs_error = abs(truth - est.value)
    return TrialRecord(
        trial_index=index,
        seed=seed,
        n=n,
        h=h,
        abs_error=abs_error,
        bias_component=abs(truth - surrogate.value),
        mad_component=abs(surrogate.value - est.value),
        neighbor_count=est.neighbor_count,
        bound_violated=abs_error > threshold,
    )


def _bias_trial(problem, x, gamma_query, n, h, base_seed, index):
    rec = _estimation_trial(problem, x, gamma_query, n, h, math.inf, base_seed, index)
    limit = problem.spec.loss.lipschitz_gamma * h + (1.0 if rec.empty_neighborhood else 0.0)
    rec.bound_violated = rec.bias_component > limit + TRIANGLE_TOL
    return rec


def _suboptimality_trial(problem, gamma_query, n, h, total, net, base_seed, index):
    seed = trial_seed(base_seed, index)
    data = sample_dataset(problem.gen, n, seed)
    result = solve_nw(data, problem.spec, gamma_query, h, net.tau, net=net)
    _, best = problem.oracle.true_optimum(gamma_query)
    truth = problem.oracle.conditional_mean_loss(result.x_hat, gamma_query)
    surrogate = nw_conditional_mean_surrogate(data, problem.oracle, result.x_hat, gamma_query, h)
    gap = truth - best
    return TrialRecord(
        trial_index=index,
        seed=seed,
        n=n,
        h=h,
        abs_error=abs(truth - result.objective_value),
        bias_component=abs(truth - surrogate.value),
        mad_component=abs(surrogate.value - result.objective_value),
        neighbor_count=result.neighbor_count,
        gap=gap,
        bound_violated=gap > total,
    )


def _run_chunk(tasks):
    out = []
    for fn, args, index in tasks:
        out.append(fn(*args, index))
    return out


def _run_trials(jobs, workers: int | None) -> list:
    """Run ``(fn, args, trial_index)`` jobs and return records sorted by trial index."""
    workers = (os.cpu_count() or 1) if workers is None else int(workers)
    if workers < 1:
        raise InvalidParameter("workers must be >= 1")
    if workers == 1 or len(jobs) < 2:
        records = _run_chunk(jobs)
    else:
        n_chunks = min(len(jobs), workers * 4)
        chunks = [jobs[i::n_chunks] for i in range(n_chunks)]
        records = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, chunks):
                records.extend(part)
    records.sort(key=lambda r: r.trial_index)
    return records


def _common_checks(records) -> dict:
    return {
        "triangle_inequality": all(
            r.abs_error <= r.bias_component + r.mad_component + TRIANGLE_TOL for r in records
        ),
        "errors_within_loss_range": all(0.0 <= r.abs_error <= 1.0 for r in records),
    }


def _report(kind, config, records, bound, bound_raw, formula, **extra) -> ExperimentReport:
    trials = len(records)
    k = sum(r.bound_violated for r in records)
    allowed = allowed_violations(bound, trials)
    report = ExperimentReport(
        kind=kind,
        config=config,
        records=records,
        empirical_violation_rate=k / trials,
        violations=k,
        theoretical_bound=bound,
        theoretical_bound_raw=bound_raw,
        theoretical_formula=formula,
        binomial_upper_conf=clopper_pearson_upper(k, trials),
        allowed_violations=allowed,
        empty_neighborhood_rate=sum(r.empty_neighborhood for r in records) / trials,
        **extra,
    )
    report.assertions.update(_common_checks(records))
    report.assertions["violations_within_binomial_slack"] = k <= allowed
    return report


def _vec(v) -> list:
    return [float(a) for a in np.atleast_1d(v)]


def _check_trials(trials: int, minimum: int = 1):
    if int(trials) != trials or trials < minimum:
        raise InvalidParameter(f"trials must be an integer >= {minimum}, got {trials!r}")


# -- experiments ----------------------------------------------------------------


def run_coverage(
    problem: SyntheticProblem,
    x_fixed,
    gamma_query,
    n: int,
    h: float,
    epsilon: float,
    trials: int,
    base_seed: int,
    workers: int | None = 1,
) -> ExperimentReport:
    """Frequency of |E - E_hat| > L_gamma h + epsilon against the failure-probability bound."""
    _check_trials(trials, 100)
    spec = problem.spec
    bound = theory.generalization_bound(
        n, spec.covariate_dim, h, epsilon, spec.density_floor, spec.loss.lipschitz_gamma
    )
    jobs = [
        (_estimation_trial, (problem, _vec(x_fixed), _vec(gamma_query), n, h, bound.threshold, base_seed), i)
        for i in range(trials)
    ]
    records = _run_trials(jobs, workers)
    config = dict(
        experiment="coverage", x_fixed=_vec(x_fixed), gamma_query=_vec(gamma_query), n=n,
        bandwidth=h, epsilon=epsilon, trials=trials, base_seed=base_seed, loss=spec.loss.name,
        lipschitz_gamma=spec.loss.lipschitz_gamma,
    )
    return _report(
        "coverage", config, records, bound.failure_probability, bound.raw_failure_probability,
        "min(1, 2*exp(-n*c*f*h^p*eps^2/2))",
        summary={"threshold": bound.threshold, "mean_abs_error": float(np.mean([r.abs_error for r in records]))},
    )


def run_bias_mad(
    problem: SyntheticProblem,
    x_fixed,
    gamma_query,
    n: int,
    h: float,
    trials: int,
    base_seed: int,
    workers: int | None = 1,
) -> ExperimentReport:
    """Split each trial's error into |E - m~| and |m~ - E_hat| and check the bias bound.

    With a nonempty neighborhood the bias part is at most L_gamma h for every
    sample, so the theoretical violation probability is zero.
    """
    _check_trials(trials)
    jobs = [(_bias_trial, (problem, _vec(x_fixed), _vec(gamma_query), n, h, base_seed), i) for i in range(trials)]
    records = _run_trials(jobs, workers)
    nonempty = [r for r in records if not r.empty_neighborhood]
    config = dict(
        experiment="bias_mad", x_fixed=_vec(x_fixed), gamma_query=_vec(gamma_query), n=n,
        bandwidth=h, trials=trials, base_seed=base_seed, loss=problem.spec.loss.name,
        lipschitz_gamma=problem.spec.loss.lipschitz_gamma,
    )
    summary = {
        "bias_limit": problem.spec.loss.lipschitz_gamma * h,
        "nonempty_trials": len(nonempty),
        "mean_bias_component": float(np.mean([r.bias_component for r in records])),
        "mean_mad_component": float(np.mean([r.mad_component for r in records])),
        "max_bias_nonempty": max((r.bias_component for r in nonempty), default=0.0),
    }
    return _report("bias_mad", config, records, 0.0, 0.0, "0 (bias <= L_gamma*h + 1[empty] holds surely)", summary=summary)


def run_rate(
    problem: SyntheticProblem,
    x_fixed,
    gamma_query,
    n_grid,
    params: BoundParams,
    trials_per_n: int,
    base_seed: int,
    workers: int | None = 1,
) -> ExperimentReport:
    """Mean absolute error under the bandwidth h(n), and its fitted log-log slope.

    A trial violates when its error exceeds L_gamma h + eps(n), where eps(n)
    makes the per-point failure bound equal ``params.delta``.
    """
    _check_trials(trials_per_n)
    n_grid = [int(v) for v in n_grid]
    if len(n_grid) < 2:
        raise InvalidParameter("n_grid needs at least two sizes")
    spec = problem.spec
    p = spec.covariate_dim
    c = theory.ball_volume_constant(p)
    jobs, levels = [], []
    for k, n in enumerate(n_grid):
        h = theory.optimal_bandwidth(n, params)
        eps = math.sqrt(2.0 * math.log(2.0 / params.delta) / (n * c * spec.density_floor * h**p))
        threshold = spec.loss.lipschitz_gamma * h + eps
        levels.append({"n": n, "h": h, "epsilon": eps, "threshold": threshold})
        for t in range(trials_per_n):
            args = (problem, _vec(x_fixed), _vec(gamma_query), n, h, threshold, base_seed)
            jobs.append((_estimation_trial, args, k * trials_per_n + t))
    records = _run_trials(jobs, workers)
    for k, level in enumerate(levels):
        chunk = records[k * trials_per_n:(k + 1) * trials_per_n]
        level["mean_abs_error"] = float(np.mean([r.abs_error for r in chunk]))
        level["empty_neighborhood_rate"] = sum(r.empty_neighborhood for r in chunk) / trials_per_n
    slope = fit_loglog_slope(n_grid, [lv["mean_abs_error"] for lv in levels])
    target = -1.0 / (p + 2)
    config = dict(
        experiment="rate", x_fixed=_vec(x_fixed), gamma_query=_vec(gamma_query), n_grid=n_grid,
        trials_per_n=trials_per_n, base_seed=base_seed, loss=spec.loss.name, params=asdict(params),
    )
    report = _report(
        "rate", config, records, params.delta, params.delta,
        "delta (eps(n) = sqrt(2*log(2/delta)/(n*c*f*h^p)))",
        fitted_rate_slope=slope,
        summary={"levels": levels, "target_slope": target, "slope_window": RATE_WINDOW},
    )
    report.assertions["slope_within_window"] = abs(slope - target) <= RATE_WINDOW
    return report


def run_suboptimality(
    problem: SyntheticProblem,
    gamma_query,
    n: int,
    params: BoundParams,
    trials: int,
    base_seed: int,
    workers: int | None = 1,
) -> ExperimentReport:
    """Frequency of a suboptimality gap above the high-probability bound, against delta."""
    _check_trials(trials)
    bound = theory.suboptimality_bound(n, params)
    h = bound.optimal_bandwidth
    net = build_tau_net(problem.spec.feasible, params.tau)
    jobs = [
        (_suboptimality_trial, (problem, _vec(gamma_query), n, h, bound.total, net, base_seed), i)
        for i in range(trials)
    ]
    records = _run_trials(jobs, workers)
    gaps = [r.gap for r in records]
    config = dict(
        experiment="suboptimality", gamma_query=_vec(gamma_query), n=n, trials=trials,
        base_seed=base_seed, loss=problem.spec.loss.name, params=asdict(params),
    )
    summary = {
        "bound": asdict(bound),
        "net_points": net.size,
        "gap_quantiles": {
            str(q): float(np.quantile(gaps, q)) for q in (0.5, 0.9, 0.99, 1.0)
        },
    }
    report = _report("suboptimality", config, records, params.delta, params.delta, "delta", summary=summary)
    report.assertions["gaps_nonnegative"] = all(g >= -TRIANGLE_TOL for g in gaps)
    return report
