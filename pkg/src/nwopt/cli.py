"""Command-line interface.

Exit codes: 0 success, 1 a statistical assertion failed, 2 bad input or I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import theory
from .estimator import nw_estimate
from .experiments import run_bias_mad, run_coverage, run_rate, run_suboptimality
from .optimizer import DEFAULT_MAX_NET_POINTS, solve_nw
from .problems import GeneratorSpec, make_newsvendor, sample_dataset
from .types import BoundParams, Dataset, FeasibleBox, NWOptError, ProblemSpec

SEED_ENV = "NWOPT_SEED"


class UsageError(Exception):
    pass


# -- dataset CSV ----------------------------------------------------------------


def _fmt(v) -> str:
    return format(float(v), ".17g")


def dataset_to_csv(data: Dataset) -> str:
    header = [f"g{j + 1}" for j in range(data.p)] + [f"xi{j + 1}" for j in range(data.q)]
    lines = [",".join(header)]
    for g, xi in zip(data.covariates, data.outcomes):
        lines.append(",".join(_fmt(v) for v in (*g, *xi)))
    return "\n".join(lines) + "\n"


def write_dataset(data: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dataset_to_csv(data))


def _parse_header(header: list[str]) -> tuple[int, int]:
    p = 0
    while p < len(header) and header[p].strip() == f"g{p + 1}":
        p += 1
    q = 0
    while p + q < len(header) and header[p + q].strip() == f"xi{q + 1}":
        q += 1
    if p == 0 or q == 0 or p + q != len(header):
        raise UsageError(f"line 1: header must be g1,...,gp,xi1,...,xiq; got {','.join(header)!r}")
    return p, q


def read_dataset(path) -> Dataset:
    """Parse the dataset CSV; errors name the offending line and column."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path}: empty file")
    p, q = _parse_header(rows[0])
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != p + q:
            raise UsageError(f"line {lineno} (row {lineno - 1}): expected {p + q} fields, got {len(row)}")
        parsed = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise UsageError(f"line {lineno} (row {lineno - 1}), column {col}: cannot parse {cell!r}") from None
            if not math.isfinite(v):
                raise UsageError(f"line {lineno} (row {lineno - 1}), column {col}: non-finite value {cell!r}")
            parsed.append(v)
        values.append(parsed)
    if not values:
        raise UsageError(f"{path}: no data rows")
    raw = np.array(values)
    return Dataset(raw[:, :p], raw[:, p:])


def parse_vector(text: str) -> np.ndarray:
    try:
        vec = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}; use comma-separated numbers") from None
    if not np.all(np.isfinite(vec)):
        raise UsageError(f"vector {text!r} has non-finite entries")
    return vec


# -- experiment config ----------------------------------------------------------


@dataclass
class RunConfig:
    """Validated experiment configuration (JSON file schema)."""

    experiment: str
    problem: dict
    base_seed: int = 0
    x_fixed: list | None = None
    gamma_query: list | None = None
    n: int | None = None
    bandwidth: float | None = None
    epsilon: float | None = None
    trials: int | None = None
    n_grid: list | None = None
    trials_per_n: int | None = None
    delta: float | None = None
    tau: float | None = None
    covering_mode: str = "ball"
    covering_constant: float = 1.0
    workers: int | None = None
    description: str = ""


_COMMON_KEYS = {"experiment", "problem", "base_seed", "workers", "description"}
_BOUND_KEYS = {"delta", "tau", "covering_mode", "covering_constant"}
EXPERIMENT_KEYS = {
    "coverage": {"x_fixed", "gamma_query", "n", "bandwidth", "epsilon", "trials"},
    "bias_mad": {"x_fixed", "gamma_query", "n", "bandwidth", "trials"},
    "rate": {"x_fixed", "gamma_query", "n_grid", "trials_per_n", "delta", "tau"},
    "suboptimality": {"gamma_query", "n", "trials", "delta", "tau"},
}
PROBLEM_KEYS = {"p", "cu", "co", "alpha", "beta", "half_width"}


def _int(name, v, minimum=1):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < minimum:
        raise UsageError(f"{name} must be an integer >= {minimum}, got {v!r}")
    return int(v)


def _num(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise UsageError(f"{name} must be a finite number, got {v!r}")
    return float(v)


def _numlist(name, v, length=None):
    if not isinstance(v, list) or not v:
        raise UsageError(f"{name} must be a non-empty list")
    out = [_num(name, a) for a in v]
    if length is not None and len(out) != length:
        raise UsageError(f"{name} must have length {length}, got {len(out)}")
    return out


def parse_run_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise UsageError("config must be a JSON object")
    kind = raw.get("experiment")
    if kind not in EXPERIMENT_KEYS:
        raise UsageError(f"experiment must be one of {sorted(EXPERIMENT_KEYS)}, got {kind!r}")
    allowed = _COMMON_KEYS | EXPERIMENT_KEYS[kind]
    if kind in ("rate", "suboptimality"):
        allowed |= _BOUND_KEYS
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise UsageError(f"unknown config keys for {kind!r}: {', '.join(unknown)}")
    missing = sorted(EXPERIMENT_KEYS[kind] - set(raw))
    if missing:
        raise UsageError(f"missing config keys for {kind!r}: {', '.join(missing)}")
    problem = dict(raw.get("problem", {}))
    bad = sorted(set(problem) - PROBLEM_KEYS)
    if bad:
        raise UsageError(f"unknown problem keys: {', '.join(bad)}")
    problem.setdefault("p", 1)
    problem["p"] = _int("problem.p", problem["p"])
    for k in PROBLEM_KEYS - {"p"}:
        if k in problem:
            problem[k] = _num(f"problem.{k}", problem[k])

    cfg = RunConfig(experiment=kind, problem=problem)
    cfg.base_seed = _int("base_seed", raw.get("base_seed", 0), minimum=0)
    if raw.get("workers") is not None:
        cfg.workers = _int("workers", raw["workers"])
    cfg.description = str(raw.get("description", ""))
    p = problem["p"]
    if "x_fixed" in raw:
        cfg.x_fixed = _numlist("x_fixed", raw["x_fixed"], 1)
    cfg.gamma_query = _numlist("gamma_query", raw["gamma_query"], p)
    for key in ("n", "trials", "trials_per_n"):
        if key in raw:
            setattr(cfg, key, _int(key, raw[key]))
    for key in ("bandwidth", "epsilon", "delta", "tau", "covering_constant"):
        if key in raw:
            setattr(cfg, key, _num(key, raw[key]))
    if "covering_mode" in raw:
        cfg.covering_mode = str(raw["covering_mode"])
    if "n_grid" in raw:
        if not isinstance(raw["n_grid"], list) or len(raw["n_grid"]) < 2:
            raise UsageError("n_grid must list at least two sample sizes")
        cfg.n_grid = [_int("n_grid", v) for v in raw["n_grid"]]
    if cfg.bandwidth is not None and cfg.bandwidth <= 0:
        raise UsageError("bandwidth must be positive")
    if cfg.epsilon is not None and not 0.0 <= cfg.epsilon <= 1.0:
        raise UsageError("epsilon must lie in [0, 1]")
    if kind == "coverage" and cfg.trials < 100:
        raise UsageError("coverage needs trials >= 100")
    # building these runs every remaining domain check before any sampling
    synthetic = build_problem(cfg)
    if kind in ("rate", "suboptimality"):
        build_params(cfg, synthetic.spec)
    return cfg


def build_problem(cfg: RunConfig):
    pr = cfg.problem
    gen = GeneratorSpec(
        p=pr["p"],
        alpha=pr.get("alpha", 0.3),
        beta=pr.get("beta", 0.4),
        half_width=pr.get("half_width", 0.2),
    )
    return make_newsvendor(pr["p"], pr.get("cu", 1.0), pr.get("co", 1.0), gen)


def build_params(cfg: RunConfig, spec: ProblemSpec) -> BoundParams:
    return BoundParams.from_problem(
        spec,
        delta=cfg.delta,
        tau=cfg.tau,
        covering_constant=cfg.covering_constant,
        covering_mode=cfg.covering_mode,
    )


def run_config(cfg: RunConfig, workers: int | None):
    problem = build_problem(cfg)
    if cfg.experiment == "coverage":
        return run_coverage(problem, cfg.x_fixed, cfg.gamma_query, cfg.n, cfg.bandwidth, cfg.epsilon,
                            cfg.trials, cfg.base_seed, workers)
    if cfg.experiment == "bias_mad":
        return run_bias_mad(problem, cfg.x_fixed, cfg.gamma_query, cfg.n, cfg.bandwidth, cfg.trials,
                            cfg.base_seed, workers)
    params = build_params(cfg, problem.spec)
    if cfg.experiment == "rate":
        return run_rate(problem, cfg.x_fixed, cfg.gamma_query, cfg.n_grid, params, cfg.trials_per_n,
                        cfg.base_seed, workers)
    return run_suboptimality(problem, cfg.gamma_query, cfg.n, params, cfg.trials, cfg.base_seed, workers)


def shipped_configs() -> list[str]:
    return sorted(p.name for p in resources.files("nwopt.configs").iterdir() if p.name.endswith(".json"))


def load_config(path: str) -> tuple[dict, str]:
    p = Path(path)
    if not p.exists() and path in shipped_configs():
        text = resources.files("nwopt.configs").joinpath(path).read_text(encoding="utf-8")
    else:
        text = p.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    return raw, Path(path).stem


def _env_seed() -> int | None:
    value = os.environ.get(SEED_ENV)
    if value is None or value == "":
        return None
    try:
        seed = int(value)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be a non-negative integer, got {value!r}") from None
    if seed < 0:
        raise UsageError(f"{SEED_ENV} must be a non-negative integer, got {value!r}")
    return seed


# -- subcommands ----------------------------------------------------------------


def _newsvendor_spec(args, data: Dataset) -> ProblemSpec:
    if data.q != 1:
        raise UsageError(f"the newsvendor loss needs q=1 outcome column, dataset has q={data.q}")
    gen = GeneratorSpec(p=data.p)
    problem = make_newsvendor(data.p, args.cu, args.co, gen).spec
    lower = parse_vector(args.lower)
    upper = parse_vector(args.upper)
    if lower.size != 1 or upper.size != 1:
        raise UsageError("the newsvendor decision is scalar; --lower/--upper take one value")
    return ProblemSpec(problem.loss, FeasibleBox(lower, upper), problem.density_floor, data.p, 1)


def _emit(pairs: dict, out=None) -> None:
    out = out or sys.stdout
    for k, v in pairs.items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        elif isinstance(v, (list, tuple, np.ndarray)):
            v = ",".join(repr(float(a)) for a in v)
        print(f"{k}={v}", file=out)


def cmd_estimate(args) -> int:
    data = read_dataset(args.data)
    spec = _newsvendor_spec(args, data)
    x = parse_vector(args.x)
    if not spec.feasible.contains(x):
        raise UsageError(f"decision {args.x} lies outside the feasible box")
    est = nw_estimate(data, spec.loss, x, parse_vector(args.query), args.bandwidth)
    _emit({"estimate": est.value, "neighbor_count": est.neighbor_count,
           "empty_neighborhood": est.empty_neighborhood})
    return 0


def cmd_solve(args) -> int:
    data = read_dataset(args.data)
    spec = _newsvendor_spec(args, data)
    res = solve_nw(data, spec, parse_vector(args.query), args.bandwidth, args.tau,
                   max_points=args.max_net_points)
    payload = {
        "x_hat": [float(v) for v in res.x_hat],
        "objective_value": res.objective_value,
        "empty_neighborhood": res.empty_neighborhood,
        "net_size": res.net_size,
        "neighbor_count": res.neighbor_count,
    }
    _emit(payload)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


_PARAM_FLAGS = {
    "delta": ("--delta", float, 0.05),
    "tau": ("--tau", float, 0.05),
    "lipschitz_x": ("--lipschitz-x", float, 1.0),
    "lipschitz_gamma": ("--lipschitz-gamma", float, 1.0),
    "density_floor": ("--density-floor", float, 1.0),
    "diameter": ("--diameter", float, 1.0),
    "d": ("--d", int, 1),
    "p": ("--p", int, 1),
    "covering_constant": ("--covering-constant", float, 1.0),
    "covering_mode": ("--covering-mode", str, "ball"),
}


def _bound_params(args, **overrides) -> BoundParams:
    values = {name: default for name, (_, _, default) in _PARAM_FLAGS.items()}
    if args.config:
        raw, _ = load_config(args.config)
        unknown = sorted(set(raw) - set(values) - {"n", "epsilon"})
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        values.update({k: v for k, v in raw.items() if k in values})
        for k in ("n", "epsilon"):
            if k in raw and getattr(args, k, None) is None:
                setattr(args, k, raw[k])
    for name in values:
        v = getattr(args, name)
        if v is not None:
            values[name] = v
    values.update(overrides)
    return BoundParams(**values)


def _need(args, name):
    if getattr(args, name, None) is None:
        raise UsageError(f"--{name} is required")
    return getattr(args, name)


def cmd_bandwidth(args) -> int:
    params = _bound_params(args)
    n = _int("n", _need(args, "n"))
    _emit({"bandwidth": theory.optimal_bandwidth(n, params), "n": n,
           "net_size": theory.net_size(params), "covering_mode": params.covering_mode})
    return 0


def cmd_bound(args) -> int:
    params = _bound_params(args)
    n = _int("n", _need(args, "n"))
    b = theory.suboptimality_bound(n, params)
    out = {
        "statistical_term": b.statistical_term,
        "discretization_term": b.discretization_term,
        "total": b.total,
        "optimal_bandwidth": b.optimal_bandwidth,
        "confidence": 1.0 - params.delta,
        "net_size": b.net_size,
        "covering_mode": b.covering_mode,
    }
    h = b.optimal_bandwidth if args.bandwidth is None else args.bandwidth
    c = theory.ball_volume_constant(params.p)
    if args.epsilon is None:
        eps = math.sqrt(2.0 * math.log(2.0 * b.net_size / params.delta) / (n * c * params.density_floor * h**params.p))
    else:
        eps = float(args.epsilon)
    out["bandwidth"] = h
    out["epsilon"] = eps
    if 0.0 <= eps <= 1.0:
        raw = theory.generalization_failure_prob_raw(n, params.p, h, eps, params.density_floor)
        out["failure_probability"] = min(1.0, raw)
        out["failure_probability_raw"] = raw
        out["union_failure_probability"] = min(1.0, b.net_size * raw)
        out["union_failure_probability_raw"] = b.net_size * raw
    else:
        out["failure_probability"] = "undefined (epsilon outside [0, 1])"
    _emit(out)
    return 0


def cmd_complexity(args) -> int:
    eps = _num("epsilon", _need(args, "epsilon"))
    params = _bound_params(args)
    tau = eps / (8.0 * params.lipschitz_x) if eps > 0 else params.tau
    params = params.replace(tau=tau)
    raw = theory.sample_complexity_raw(eps, params.delta, params)
    _emit({"n_required": int(math.ceil(raw)), "n_required_raw": raw, "epsilon": eps,
           "delta": params.delta, "tau": tau, "net_size": theory.net_size(params),
           "covering_mode": params.covering_mode})
    return 0


def cmd_generate(args) -> int:
    seed = _env_seed()
    seed = args.seed if seed is None else seed
    gen = GeneratorSpec(p=args.p, alpha=args.alpha, beta=args.beta, half_width=args.half_width)
    data = sample_dataset(gen, _int("n", args.n), seed)
    if args.out == "-":
        sys.stdout.write(dataset_to_csv(data))
    else:
        write_dataset(data, args.out)
        print(f"wrote {data.n} rows to {args.out}")
    return 0


def cmd_experiment(args) -> int:
    raw, stem = load_config(args.config)
    cfg = parse_run_config(raw)
    seed = _env_seed()
    if seed is not None:
        cfg.base_seed = seed
    workers = args.workers if args.workers is not None else cfg.workers
    if workers is not None and workers < 1:
        raise UsageError("--workers must be >= 1")
    report = run_config(cfg, workers)
    csv_path, json_path = report.write(args.out, stem)
    print(f"experiment={report.kind} trials={len(report.records)}")
    print(f"violations={report.violations} empirical_violation_rate={_fmt(report.empirical_violation_rate)}")
    print(f"theoretical_bound={_fmt(report.theoretical_bound)} [{report.theoretical_formula}]")
    print(f"binomial_upper_conf={_fmt(report.binomial_upper_conf)} allowed_violations={report.allowed_violations}")
    print(f"empty_neighborhood_rate={_fmt(report.empty_neighborhood_rate)}")
    if report.fitted_rate_slope is not None:
        print(f"fitted_rate_slope={_fmt(report.fitted_rate_slope)} target={_fmt(report.summary['target_slope'])}")
    for name, ok in report.assertions.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    return 0 if report.passed else 1


# -- parser ---------------------------------------------------------------------


def _add_param_flags(sp):
    for name, (flag, typ, _) in _PARAM_FLAGS.items():
        sp.add_argument(flag, dest=name, type=typ, default=None)
    sp.add_argument("--config", help="JSON file with bound parameters")


def _add_loss_flags(sp):
    sp.add_argument("--cu", type=float, default=1.0, help="underage cost")
    sp.add_argument("--co", type=float, default=1.0, help="overage cost")
    sp.add_argument("--lower", default="0", help="feasible box lower bound")
    sp.add_argument("--upper", default="1", help="feasible box upper bound")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nwopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("estimate", help="NW estimate of the conditional expected loss")
    sp.add_argument("--data", required=True)
    sp.add_argument("--query", required=True, help="covariate vector, comma-separated")
    sp.add_argument("--x", required=True, help="decision vector, comma-separated")
    sp.add_argument("--bandwidth", type=float, required=True)
    _add_loss_flags(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("solve", help="minimize the NW estimate over a tau-net")
    sp.add_argument("--data", required=True)
    sp.add_argument("--query", required=True)
    sp.add_argument("--bandwidth", type=float, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--max-net-points", type=int, default=DEFAULT_MAX_NET_POINTS)
    sp.add_argument("--output", help="also write the result as JSON")
    _add_loss_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("bandwidth", help="bandwidth h(n) minimizing the error bound")
    sp.add_argument("--n", type=int)
    _add_param_flags(sp)
    sp.set_defaults(func=cmd_bandwidth)

    sp = sub.add_parser("bound", help="suboptimality and failure-probability bounds")
    sp.add_argument("--n", type=int)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--bandwidth", type=float)
    _add_param_flags(sp)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("complexity", help="sufficient sample size for an epsilon gap")
    sp.add_argument("--epsilon", type=float)
    _add_param_flags(sp)
    sp.set_defaults(func=cmd_complexity)

    sp = sub.add_parser("experiment", help="run a Monte Carlo experiment from a JSON config")
    sp.add_argument("config", help="config path, or the name of a shipped config")
    sp.add_argument("--out", default="nwopt_out", help="output directory")
    sp.add_argument("--workers", type=int, default=None, help="worker processes (default: core count)")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("generate", help="sample a synthetic newsvendor dataset")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--alpha", type=float, default=0.3)
    sp.add_argument("--beta", type=float, default=0.4)
    sp.add_argument("--half-width", type=float, default=0.2)
    sp.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
    sp.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, NWOptError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
