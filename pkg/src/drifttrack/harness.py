"""Experiment orchestration: configs, trial fan-out, aggregation, outputs.

A JSON config fully determines an experiment.  Trials differ only in their
stream id, so results are reproducible and independent of how many worker
threads execute them (set ``DRIFTTRACK_MAX_WORKERS`` to pin the pool size).
Reports land in the configured output directory: ``series.csv`` with the
per-step aggregates and bound curves, ``meta.json`` with everything needed
to reproduce the run, and ``series.svg`` / ``series.png`` renderings.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import plots
from .algorithms import KINDS, run
from .bounds import BoundParams, bound_curve
from .errors import CalibrationError, ParameterError
from .mathkit import RngStream
from .problems import (
    DriftingProblem,
    make_least_squares,
    make_logistic,
    make_performative,
    make_sparse_least_squares,
)
from .schedules import (
    SCHEDULE_KINDS,
    Schedule,
    classify_regime,
    critical_step,
    decay_dist_expectation,
    decay_dist_highprob,
    decay_gap_expectation,
    decay_gap_highprob,
)

MAX_WORKERS_ENV = "DRIFTTRACK_MAX_WORKERS"

SERIES_HEADER = "t,mean_dist_sq,lo_dist_sq,hi_dist_sq,mean_gap,lo_gap,hi_gap,bound_dist,bound_gap"
SWEEP_HEADER = "param_value,mean_final,lo_final,hi_final,bound_final"

_PROBLEM_KEYS = {
    "least_squares": {
        "dim", "n_samples", "mu", "smoothness", "noise_bound", "drift_bound", "history_window",
    },
    "sparse_least_squares": {
        "dim", "n_samples", "mu", "smoothness", "noise_bound", "drift_bound", "history_window",
    },
    "logistic": {"dim", "n_samples", "mu", "history_window"},
    "performative": {
        "dim", "sensitivity", "drift_rate", "noise_scale", "reg_strength", "history_window",
    },
}

_PROBLEM_FACTORIES = {
    "least_squares": make_least_squares,
    "sparse_least_squares": make_sparse_least_squares,
    "logistic": make_logistic,
    "performative": make_performative,
}

SWEEP_PARAMS = ("eta", "sigma", "delta_drift", "mu", "gamma", "theta")

_CONFIG_KEYS = {
    "problem", "algorithm", "schedule", "horizon", "trials", "seed", "band_level",
    "bound_family", "confidence_delta", "noise_factor_c", "sweep", "output_dir",
}


def _reject_unknown(data: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ParameterError(f"unknown {where} keys: {', '.join(unknown)}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (see README for the JSON schema)."""

    problem: dict
    algorithm: str
    schedule: dict
    horizon: int
    trials: int
    seed: int = 0
    band_level: float = 0.95
    bound_family: str = "expectation"
    confidence_delta: float = 0.05
    noise_factor_c: float = 1.0
    sweep: dict | None = None
    output_dir: str | None = None

    def __post_init__(self):
        if not isinstance(self.problem, dict) or "family" not in self.problem:
            raise ParameterError("problem must be a mapping with a 'family' key")
        family = self.problem["family"]
        if family not in _PROBLEM_FACTORIES:
            raise ParameterError(
                f"unknown problem family {family!r}, expected one of {sorted(_PROBLEM_FACTORIES)}"
            )
        _reject_unknown(
            {k: v for k, v in self.problem.items() if k != "family"},
            _PROBLEM_KEYS[family],
            f"problem ({family})",
        )
        if self.algorithm not in KINDS:
            raise ParameterError(f"unknown algorithm {self.algorithm!r}, expected one of {KINDS}")
        if not isinstance(self.schedule, dict) or "kind" not in self.schedule:
            raise ParameterError("schedule must be a mapping with a 'kind' key")
        kind = self.schedule["kind"]
        if kind not in SCHEDULE_KINDS:
            raise ParameterError(f"unknown schedule kind {kind!r}")
        extra = {"eta"} if kind == "constant" else set()
        _reject_unknown(
            {k: v for k, v in self.schedule.items() if k != "kind"}, extra, "schedule"
        )
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ParameterError("horizon must be a positive integer")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ParameterError("trials must be a positive integer")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ParameterError("seed must be a nonnegative integer")
        if not 0.0 < self.band_level <= 1.0:
            raise ParameterError("band_level must lie in (0, 1]")
        if self.bound_family not in ("expectation", "highprob"):
            raise ParameterError("bound_family must be 'expectation' or 'highprob'")
        if not 0.0 < self.confidence_delta < 1.0:
            raise ParameterError("confidence_delta must lie in (0, 1)")
        if self.noise_factor_c <= 0.0:
            raise ParameterError("noise_factor_c must be positive")
        if self.sweep is not None:
            if not isinstance(self.sweep, dict):
                raise ParameterError("sweep must be a mapping")
            _reject_unknown(self.sweep, {"param", "values"}, "sweep")
            param = self.sweep.get("param")
            values = self.sweep.get("values")
            if param not in SWEEP_PARAMS:
                raise ParameterError(
                    f"unknown sweep parameter {param!r}, expected one of {SWEEP_PARAMS}"
                )
            if not isinstance(values, (list, tuple)) or not values:
                raise ParameterError("sweep values must be a nonempty list of numbers")
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
                raise ParameterError("sweep values must be numbers")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ParameterError("config must be a JSON object")
        _reject_unknown(data, _CONFIG_KEYS, "config")
        missing = [k for k in ("problem", "algorithm", "schedule", "horizon", "trials") if k not in data]
        if missing:
            raise ParameterError(f"config is missing required keys: {', '.join(missing)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParameterError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def replace(self, **updates) -> "ExperimentConfig":
        merged = {
            "problem": dict(self.problem),
            "algorithm": self.algorithm,
            "schedule": dict(self.schedule),
            "horizon": self.horizon,
            "trials": self.trials,
            "seed": self.seed,
            "band_level": self.band_level,
            "bound_family": self.bound_family,
            "confidence_delta": self.confidence_delta,
            "noise_factor_c": self.noise_factor_c,
            "sweep": dict(self.sweep) if self.sweep else None,
            "output_dir": self.output_dir,
        }
        merged.update(updates)
        return ExperimentConfig(**merged)


def build_problem(config: ExperimentConfig) -> DriftingProblem:
    """Instantiate the configured problem family from the config's seed."""
    knobs = dict(config.problem)
    family = knobs.pop("family")
    return _PROBLEM_FACTORIES[family](seed=config.seed, **knobs)


def _tracking_mu(problem: DriftingProblem) -> float:
    mu_eff = problem.mu - problem.sensitivity
    if mu_eff <= 0.0:
        raise ParameterError("tracking requires sensitivity below mu")
    return mu_eff


def _gap_mu(problem: DriftingProblem) -> float | None:
    mu_eff = problem.mu - 2.0 * problem.sensitivity
    return mu_eff if mu_eff > 0.0 else None


def resolve_schedule(config: ExperimentConfig, problem: DriftingProblem) -> Schedule:
    """Turn the schedule block into concrete epochs for this problem.

    A constant schedule without an explicit ``eta`` uses the critical step of
    the tracking constants.  Decay schedules measure their initial distance
    or gap at the problem's start point, which is deterministic per seed.
    """
    kind = config.schedule["kind"]
    mu_track = _tracking_mu(problem)
    L = problem.smoothness
    sigma = problem.noise_bound
    drift = problem.drift_bound
    if kind == "constant":
        eta = config.schedule.get("eta")
        if eta is None:
            eta = critical_step(mu_track, L, sigma, drift)
            if eta <= 0.0:
                raise ParameterError(
                    "the critical step degenerates to zero here; set eta explicitly"
                )
        return Schedule.constant(float(eta))
    x0 = problem.initial_point()
    ref0 = problem.reference(0)
    if kind in ("decay_dist_expectation", "decay_dist_highprob"):
        d0 = float(np.sum((x0 - ref0.point) ** 2))
        maker = decay_dist_expectation if kind == "decay_dist_expectation" else decay_dist_highprob
        return maker(mu_track, L, sigma, drift, d0)
    mu_gap = _gap_mu(problem)
    if mu_gap is None:
        raise ParameterError("gap schedules require sensitivity below mu / 2")
    g0 = float(problem.objective(0, x0) - ref0.value)
    if kind == "decay_gap_expectation":
        return decay_gap_expectation(mu_gap, L, sigma, drift, g0)
    return decay_gap_highprob(
        mu_gap, L, sigma, drift, g0, config.confidence_delta, config.noise_factor_c
    )


@dataclass
class AggregateSeries:
    """Per-step aggregates over trials plus the matching bound curves."""

    times: np.ndarray
    mean_dist_sq: np.ndarray
    lo_dist_sq: np.ndarray
    hi_dist_sq: np.ndarray
    mean_gap: np.ndarray
    lo_gap: np.ndarray
    hi_gap: np.ndarray
    bound_dist: np.ndarray
    bound_gap: np.ndarray
    schedule: Schedule
    meta: dict
    dist_matrix: np.ndarray = field(repr=False, default=None)
    gap_matrix: np.ndarray = field(repr=False, default=None)


def _max_workers() -> int:
    raw = os.environ.get(MAX_WORKERS_ENV)
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError:
        raise ParameterError(f"{MAX_WORKERS_ENV} must be a positive integer, got {raw!r}")
    if value < 1:
        raise ParameterError(f"{MAX_WORKERS_ENV} must be a positive integer, got {raw!r}")
    return value


def _bound_params(
    config: ExperimentConfig, problem: DriftingProblem, eta: float, metric: str
) -> BoundParams | None:
    """Bound constants for one metric, or None when no guarantee applies."""
    x0 = problem.initial_point()
    ref0 = problem.reference(0)
    dist0 = float(np.sum((x0 - ref0.point) ** 2))
    if metric == "dist":
        mu_eff = _tracking_mu(problem)
        d0 = dist0
    else:
        mu_eff = _gap_mu(problem)
        if mu_eff is None:
            return None
        d0 = float(problem.objective(0, x0) - ref0.value)
    return BoundParams(
        mu_eff=mu_eff,
        smoothness=problem.smoothness,
        eta=eta,
        sigma=problem.noise_bound,
        delta_eff=problem.drift_bound,
        d0=d0,
        delta=config.confidence_delta,
        c=config.noise_factor_c,
        mu=problem.mu,
        initial_dist_sq=dist0,
    )


def _bound_columns(
    config: ExperimentConfig, problem: DriftingProblem, schedule: Schedule
) -> tuple[np.ndarray, np.ndarray]:
    """Bound curves for the CSV; NaN where no constant-step guarantee exists."""
    horizon = config.horizon
    nan_curve = np.full(horizon + 1, math.nan)
    if schedule.kind != "constant":
        return nan_curve, nan_curve.copy()
    eta = schedule.epochs[0][0]
    columns = []
    for metric in ("dist", "gap"):
        params = _bound_params(config, problem, eta, metric)
        if params is None:
            columns.append(nan_curve.copy())
            continue
        name = f"{metric}_{config.bound_family}"
        try:
            columns.append(bound_curve(name, params, horizon).values)
        except ParameterError:
            columns.append(nan_curve.copy())
    return columns[0], columns[1]


def _run_trials(config: ExperimentConfig, steps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Simulate all trials; row ``i`` always comes from stream id ``i``."""

    def one_trial(index: int):
        problem = build_problem(config)
        rng = RngStream(config.seed, index)
        trajectory = run(problem, config.algorithm, steps, rng)
        return trajectory.dist_sq, trajectory.gap

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        results = list(pool.map(one_trial, range(config.trials)))
    dist = np.vstack([r[0] for r in results])
    gap = np.vstack([r[1] for r in results])
    return dist, gap


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _build_meta(config: ExperimentConfig, problem: DriftingProblem, schedule: Schedule) -> dict:
    mu_track = _tracking_mu(problem)
    regime = classify_regime(mu_track, problem.smoothness, problem.noise_bound, problem.drift_bound)
    meta = {
        "algorithm": config.algorithm,
        "band_level": config.band_level,
        "bound_family": config.bound_family,
        "confidence_delta": config.confidence_delta,
        "noise_factor_c": config.noise_factor_c,
        "horizon": config.horizon,
        "trials": config.trials,
        "seed": config.seed,
        "problem": dict(config.problem),
        "derived": {
            "dim": problem.dim,
            "mu": problem.mu,
            "smoothness": problem.smoothness,
            "noise_bound": problem.noise_bound,
            "drift_bound": problem.drift_bound,
            "sensitivity": problem.sensitivity,
            "mu_tracking": mu_track,
            "mu_gap": _gap_mu(problem),
        },
        "schedule": {
            "kind": schedule.kind,
            "epochs": [[eta, steps] for eta, steps in schedule.epochs],
            "params": dict(schedule.params),
        },
        "regime": {
            "regime": regime.regime,
            "ratio": None if math.isinf(regime.ratio) else regime.ratio,
            "threshold": regime.threshold,
            "eta_star": regime.eta_star,
            "plateau_dist": regime.plateau_dist,
            "plateau_gap": regime.plateau_gap,
            "degenerate": regime.degenerate,
        },
    }
    if "final_guarantee" in schedule.params:
        meta["final_guarantee"] = schedule.params["final_guarantee"]
    return _jsonable(meta)


def run_experiment(config: ExperimentConfig, write: bool = True) -> AggregateSeries:
    """Simulate, aggregate, attach bounds, and (optionally) write the report."""
    problem = build_problem(config)
    schedule = resolve_schedule(config, problem)
    steps = schedule.step_sizes(config.horizon)
    dist, gap = _run_trials(config, steps)

    lo_q = (1.0 - config.band_level) / 2.0
    hi_q = 1.0 - lo_q
    bound_dist, bound_gap = _bound_columns(config, problem, schedule)
    result = AggregateSeries(
        times=np.arange(config.horizon + 1),
        mean_dist_sq=dist.mean(axis=0),
        lo_dist_sq=np.quantile(dist, lo_q, axis=0),
        hi_dist_sq=np.quantile(dist, hi_q, axis=0),
        mean_gap=gap.mean(axis=0),
        lo_gap=np.quantile(gap, lo_q, axis=0),
        hi_gap=np.quantile(gap, hi_q, axis=0),
        bound_dist=bound_dist,
        bound_gap=bound_gap,
        schedule=schedule,
        meta=_build_meta(config, problem, schedule),
        dist_matrix=dist,
        gap_matrix=gap,
    )
    if write and config.output_dir is not None:
        write_outputs(result, config.output_dir)
    return result


def write_outputs(result: AggregateSeries, output_dir: str) -> None:
    """Write series.csv, meta.json, and the figure pair into ``output_dir``."""
    os.makedirs(output_dir, exist_ok=True)
    rows = [SERIES_HEADER]
    columns = (
        result.mean_dist_sq, result.lo_dist_sq, result.hi_dist_sq,
        result.mean_gap, result.lo_gap, result.hi_gap,
        result.bound_dist, result.bound_gap,
    )
    for i, t in enumerate(result.times):
        values = ",".join(f"{col[i]:.17g}" for col in columns)
        rows.append(f"{int(t)},{values}")
    with open(os.path.join(output_dir, "series.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    with open(os.path.join(output_dir, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(result.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    series = {
        "mean_dist_sq": result.mean_dist_sq,
        "mean_gap": result.mean_gap,
        "bound_dist": result.bound_dist,
        "bound_gap": result.bound_gap,
    }
    plots.write_series_svg(
        os.path.join(output_dir, "series.svg"), result.times, series
    )
    plots.write_series_png(
        os.path.join(output_dir, "series.png"),
        result.times,
        series,
        bands={
            "mean_dist_sq": (result.lo_dist_sq, result.hi_dist_sq),
            "mean_gap": (result.lo_gap, result.hi_gap),
        },
    )


def _apply_sweep_value(config: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    family = config.problem["family"]
    if param == "eta":
        if config.schedule["kind"] != "constant":
            raise ParameterError("sweeping eta requires a constant schedule")
        schedule = dict(config.schedule)
        schedule["eta"] = float(value)
        return config.replace(schedule=schedule)
    problem = dict(config.problem)
    updates = {
        "sigma": ("noise_bound", ("least_squares", "sparse_least_squares")),
        "delta_drift": ("drift_bound", ("least_squares", "sparse_least_squares")),
        "mu": ("mu", ("least_squares", "sparse_least_squares", "logistic")),
        "gamma": ("sensitivity", ("performative",)),
        "theta": ("drift_rate", ("performative",)),
    }
    key, families = updates[param]
    if family not in families:
        raise ParameterError(f"sweep parameter {param!r} does not apply to family {family!r}")
    problem[key] = float(value)
    return config.replace(problem=problem)


def run_sweep(config: ExperimentConfig) -> tuple[list, list]:
    """Run the configured sweep; returns (dist_rows, gap_rows) of 5-tuples."""
    if config.sweep is None:
        raise ParameterError("config has no sweep block")
    param = config.sweep["param"]
    final = config.horizon
    dist_rows = []
    gap_rows = []
    for value in config.sweep["values"]:
        sub = _apply_sweep_value(config, param, float(value))
        result = run_experiment(sub, write=False)
        dist_rows.append(
            (
                float(value),
                float(result.mean_dist_sq[final]),
                float(result.lo_dist_sq[final]),
                float(result.hi_dist_sq[final]),
                float(result.bound_dist[final]),
            )
        )
        gap_rows.append(
            (
                float(value),
                float(result.mean_gap[final]),
                float(result.lo_gap[final]),
                float(result.hi_gap[final]),
                float(result.bound_gap[final]),
            )
        )
    if config.output_dir is not None:
        _write_sweep(config, param, dist_rows, gap_rows)
    return dist_rows, gap_rows


def _write_sweep(config: ExperimentConfig, param: str, dist_rows: list, gap_rows: list) -> None:
    os.makedirs(config.output_dir, exist_ok=True)
    for name, rows in (("sweep_dist.csv", dist_rows), ("sweep_gap.csv", gap_rows)):
        lines = [SWEEP_HEADER]
        lines += [",".join(f"{v:.17g}" for v in row) for row in rows]
        with open(os.path.join(config.output_dir, name), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    plots.write_sweep_png(
        os.path.join(config.output_dir, "sweep.png"), param, dist_rows, gap_rows
    )


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of fitting the noise factor c to empirical coverage."""

    c: float
    coverage: float
    target: float
    trials: int
    metric: str
    bound: str


def calibrate_c(
    config: ExperimentConfig,
    c_lo: float = 0.1,
    c_hi: float = 64.0,
    tol: float = 1e-3,
) -> CalibrationResult:
    """Smallest bracketed c whose bound covers a 1 - confidence_delta
    fraction of trials at every time step simultaneously.

    Bisection on c against empirical coverage; the returned value is the
    upper endpoint of the final bracket, so its coverage is guaranteed to
    meet the target.  Requires the high-probability bound family, a constant
    schedule, and at least 200 trials for a stable coverage estimate.
    """
    if config.bound_family != "highprob":
        raise ParameterError("calibration only makes sense for the highprob bound family")
    if config.schedule["kind"] != "constant":
        raise ParameterError("calibration requires a constant schedule")
    if config.trials < 200:
        raise ParameterError("calibration needs at least 200 trials")
    if not 0.0 < c_lo < c_hi:
        raise ParameterError("need 0 < c_lo < c_hi")

    result = run_experiment(config, write=False)
    averaged = config.algorithm in ("averaged_psg", "averaged_dpsg")
    metric = "gap" if averaged else "dist"
    matrix = result.gap_matrix if averaged else result.dist_matrix
    bound_name = f"{metric}_highprob"
    problem = build_problem(config)
    eta = result.schedule.epochs[0][0]
    base = _bound_params(config, problem, eta, metric)
    if base is None:
        raise ParameterError("no bound applies to this configuration")
    target = 1.0 - config.confidence_delta

    def coverage(c: float) -> float:
        params = BoundParams(
            mu_eff=base.mu_eff,
            smoothness=base.smoothness,
            eta=base.eta,
            sigma=base.sigma,
            delta_eff=base.delta_eff,
            d0=base.d0,
            delta=base.delta,
            c=c,
            mu=base.mu,
            initial_dist_sq=base.initial_dist_sq,
        )
        curve = bound_curve(bound_name, params, config.horizon).values
        valid = np.isfinite(curve)
        covered = (matrix[:, valid] <= curve[valid]).all(axis=1)
        return float(covered.mean())

    cov_lo = coverage(c_lo)
    if cov_lo >= target:
        return CalibrationResult(c_lo, cov_lo, target, config.trials, metric, bound_name)
    cov_hi = coverage(c_hi)
    if cov_hi < target:
        raise CalibrationError(
            f"coverage {cov_hi:.4f} at c = {c_hi} still misses the target {target:.4f}"
        )
    lo, hi = c_lo, c_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if coverage(mid) >= target:
            hi = mid
        else:
            lo = mid
    return CalibrationResult(hi, coverage(hi), target, config.trials, metric, bound_name)
