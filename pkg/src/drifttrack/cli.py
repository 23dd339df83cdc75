"""Command line entry point.

Every subcommand reads the same JSON config; ``--output-dir`` overrides the
config's ``output_dir`` so one file can drive several runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bounds import bound_curve
from .errors import DriftTrackError
from .harness import (
    ExperimentConfig,
    _bound_params,
    build_problem,
    calibrate_c,
    resolve_schedule,
    run_experiment,
    run_sweep,
)


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config)
    if getattr(args, "output_dir", None):
        config = config.replace(output_dir=args.output_dir)
    return config


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    result = run_experiment(config)
    final = int(result.times[-1])
    print(f"ran {config.trials} trials of {config.algorithm} for {config.horizon} steps")
    print(f"final mean squared distance: {result.mean_dist_sq[final]:.6g}")
    print(f"final mean gap:              {result.mean_gap[final]:.6g}")
    if "final_guarantee" in result.meta:
        print(f"guaranteed final value:      {result.meta['final_guarantee']:.6g}")
    if config.output_dir:
        print(f"report written to {config.output_dir}")
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    dist_rows, gap_rows = run_sweep(config)
    param = config.sweep["param"]
    print(f"swept {param} over {len(dist_rows)} values")
    for (value, mean_d, _, _, _), (_, mean_g, _, _, _) in zip(dist_rows, gap_rows):
        print(f"  {param}={value:.6g}: final dist {mean_d:.6g}, final gap {mean_g:.6g}")
    if config.output_dir:
        print(f"sweep tables written to {config.output_dir}")
    return 0


def _cmd_bounds(args) -> int:
    config = _load_config(args)
    problem = build_problem(config)
    schedule = resolve_schedule(config, problem)
    if schedule.kind != "constant":
        print("decay schedules carry a final guarantee instead of per-step bounds",
              file=sys.stderr)
        guarantee = schedule.params.get("final_guarantee")
        if guarantee is not None:
            print(f"final guarantee: {guarantee:.6g}")
        return 0
    eta = schedule.epochs[0][0]
    curves = {}
    for metric in ("dist", "gap"):
        params = _bound_params(config, problem, eta, metric)
        if params is None:
            continue
        name = f"{metric}_{config.bound_family}"
        curves[f"bound_{metric}"] = bound_curve(name, params, config.horizon).values
    lines = ["t," + ",".join(curves)]
    for t in range(config.horizon + 1):
        lines.append(f"{t}," + ",".join(f"{curves[k][t]:.17g}" for k in curves))
    text = "\n".join(lines) + "\n"
    if config.output_dir:
        os.makedirs(config.output_dir, exist_ok=True)
        path = os.path.join(config.output_dir, "bounds.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"bound curves written to {path}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_schedule(args) -> int:
    config = _load_config(args)
    problem = build_problem(config)
    schedule = resolve_schedule(config, problem)
    print(f"schedule kind: {schedule.kind}")
    for k, (eta, steps) in enumerate(schedule.epochs):
        length = "open-ended" if steps is None else f"{steps} steps"
        print(f"  epoch {k}: eta = {eta:.9g}, {length}")
    total = schedule.total_steps
    if total is not None:
        print(f"total scheduled steps: {total}")
    for key in ("eta_star", "final_guarantee", "failure_prob"):
        if key in schedule.params:
            print(f"{key}: {schedule.params[key]:.9g}")
    from .schedules import classify_regime

    regime = classify_regime(
        problem.mu - problem.sensitivity,
        problem.smoothness,
        problem.noise_bound,
        problem.drift_bound,
    )
    ratio = "inf" if np.isinf(regime.ratio) else f"{regime.ratio:.6g}"
    print(
        f"regime: {regime.regime} (drift-to-noise {ratio}, threshold {regime.threshold:.6g})"
    )
    return 0


def _cmd_calibrate(args) -> int:
    config = _load_config(args)
    result = calibrate_c(config)
    print(f"calibrated c = {result.c:.6g} for {result.bound}")
    print(f"coverage {result.coverage:.4f} against target {result.target:.4f} "
          f"over {result.trials} trials")
    if config.output_dir:
        os.makedirs(config.output_dir, exist_ok=True)
        path = os.path.join(config.output_dir, "calibration.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "c": result.c,
                    "coverage": result.coverage,
                    "target": result.target,
                    "trials": result.trials,
                    "metric": result.metric,
                    "bound": result.bound,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        print(f"calibration written to {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="drifttrack",
        description="Track drifting optima with proximal stochastic gradient runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "simulate": (_cmd_simulate, "run trials and write the series report"),
        "sweep": (_cmd_sweep, "rerun the experiment across a parameter grid"),
        "bounds": (_cmd_bounds, "evaluate the bound curves without simulating"),
        "schedule": (_cmd_schedule, "print the resolved step-size schedule"),
        "calibrate": (_cmd_calibrate, "fit the noise factor c to empirical coverage"),
    }
    for name, (_, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the experiment JSON")
        p.add_argument("--output-dir", default=None, help="override the config's output_dir")
    args = parser.parse_args(argv)
    handler = commands[args.command][0]
    try:
        return handler(args)
    except DriftTrackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
