"""End-to-end checks, one test per shipped guarantee.

Each test prints a single PASS/FAIL line (visible under ``pytest -s`` or
``-rA``) and then asserts, so the suite reads as a checklist.  Tolerances and
time limits are fixed here on purpose: loosening them is a behaviour change,
not a test fix.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from drifttrack.algorithms import averaged_path, averaging_weight, run
from drifttrack.harness import (
    MAX_WORKERS_ENV,
    ExperimentConfig,
    build_problem,
    calibrate_c,
    resolve_schedule,
    run_experiment,
)
from drifttrack.mathkit import RngStream
from drifttrack.problems import (
    compute_equilibrium,
    make_least_squares,
    make_logistic,
    make_performative,
    make_sparse_least_squares,
)
from drifttrack.prox import Regularizer, project_l1_ball, prox, soft_threshold
from drifttrack.schedules import classify_regime, decay_dist_expectation

DATA_DIR = Path(__file__).parent / "data"


def _report(criterion: int, ok: bool, text: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    print(f"{verdict} criterion {criterion:2d}: {text}", flush=True)


def test_criterion_01_tracking_error_stays_under_its_bound():
    config = ExperimentConfig.from_dict(
        {
            "problem": {"family": "least_squares"},
            "algorithm": "psg",
            "schedule": {"kind": "constant"},
            "horizon": 100,
            "trials": 100,
            "seed": 0,
        }
    )
    start = time.monotonic()
    result = run_experiment(config, write=False)
    elapsed = time.monotonic() - start
    mean = result.mean_dist_sq
    tail = mean[-10:]
    covered = bool((mean <= result.bound_dist).all())
    decays = bool(mean[0] > 4.0 * tail.mean())
    plateaus = bool(tail.max() < 2.0 * tail.min())
    fast = elapsed < 60.0
    ok = covered and decays and plateaus and fast
    _report(
        1,
        ok,
        "mean tracking error under its bound at every step, decaying to a "
        f"plateau (margin {np.min(result.bound_dist - mean):.3g}, {elapsed:.1f}s)",
    )
    assert covered and decays and plateaus and fast


def test_criterion_02_regime_report_reference_values():
    report = classify_regime(1.0, 1.0, 10.0, 1.0)
    ok = (
        report.regime == "low"
        and report.threshold == pytest.approx(0.25, abs=1e-12)
        and report.eta_star == pytest.approx(0.2714417616594907, abs=1e-4)
        and report.plateau_dist == pytest.approx(40.7162642489236, abs=1e-2)
    )
    _report(
        2,
        ok,
        f"regime report gives low / 0.25 / {report.eta_star:.6f} / "
        f"{report.plateau_dist:.4f}",
    )
    assert report.regime == "low"
    assert report.threshold == pytest.approx(0.25, abs=1e-12)
    assert report.eta_star == pytest.approx(0.2714417616594907, abs=1e-4)
    assert report.plateau_dist == pytest.approx(40.7162642489236, abs=1e-2)


def test_criterion_03_decay_schedule_meets_its_final_guarantee():
    config = ExperimentConfig.from_dict(
        {
            "problem": {"family": "least_squares"},
            "algorithm": "psg",
            "schedule": {"kind": "decay_dist_expectation"},
            "horizon": 1,
            "trials": 200,
            "seed": 0,
        }
    )
    schedule = resolve_schedule(config, build_problem(config))
    config = config.replace(horizon=schedule.total_steps)
    start = time.monotonic()
    result = run_experiment(config, write=False)
    elapsed = time.monotonic() - start
    guarantee = result.meta["final_guarantee"]
    final = float(result.mean_dist_sq[-1])
    ok = (
        abs(guarantee - 205.953750796332) <= 1e-9
        and final <= guarantee
        and elapsed < 120.0
    )
    _report(
        3,
        ok,
        f"decay run ends at {final:.2f}, under the guaranteed "
        f"{guarantee:.2f} ({elapsed:.1f}s)",
    )
    assert guarantee == pytest.approx(205.953750796332, abs=1e-9)
    assert final <= guarantee
    assert elapsed < 120.0


def test_criterion_04_calibrated_noise_factor_is_small_and_reproducible():
    config = ExperimentConfig.from_dict(
        {
            "problem": {"family": "least_squares"},
            "algorithm": "psg",
            "schedule": {"kind": "constant"},
            "horizon": 60,
            "trials": 500,
            "seed": 7,
            "bound_family": "highprob",
            "confidence_delta": 0.05,
        }
    )
    result = calibrate_c(config)
    baseline = json.loads((DATA_DIR / "calibration_baseline.json").read_text())
    ok = (
        result.c <= 4.0
        and result.coverage >= 0.95
        and abs(result.c - baseline["c"]) <= 1e-9
        and abs(result.coverage - baseline["coverage"]) <= 1e-9
        and result.bound == baseline["bound"]
        and result.metric == baseline["metric"]
        and result.trials == baseline["trials"]
        and result.target == baseline["target"]
    )
    _report(
        4,
        ok,
        f"calibrated c = {result.c:.3g} with coverage {result.coverage:.3f}, "
        "matching the frozen baseline",
    )
    assert result.c <= 4.0
    assert result.coverage >= 0.95
    assert result.c == pytest.approx(baseline["c"], abs=1e-9)
    assert result.coverage == pytest.approx(baseline["coverage"], abs=1e-9)
    assert result.bound == baseline["bound"]
    assert result.metric == baseline["metric"]
    assert result.trials == baseline["trials"]
    assert result.target == baseline["target"]


def test_criterion_05_running_average_matches_its_product_form():
    schedule = decay_dist_expectation(1.0, 1.0, 10.0, 1.0, 100.0)
    steps = schedule.step_sizes(50)
    problem = make_least_squares(seed=3)
    trajectory = run(problem, "averaged_psg", steps, RngStream(3, 1))
    weights = np.array([averaging_weight(1.0, float(eta)) for eta in steps])
    path = averaged_path(trajectory.iterates[0], trajectory.iterates[1:], weights)
    recursion_err = float(np.max(np.abs(path - trajectory.averages)))

    gammas = np.cumprod(1.0 - weights)
    lhs = 1.0 + float(np.sum(weights / gammas))
    rhs = 1.0 / float(gammas[-1])
    identity_err = abs(lhs - rhs) / rhs

    ok = recursion_err <= 1e-10 and identity_err <= 1e-10
    _report(
        5,
        ok,
        f"averaging recursion and product form agree to {recursion_err:.2e}; "
        f"weight identity holds to {identity_err:.2e}",
    )
    assert recursion_err <= 1e-10
    assert identity_err <= 1e-10


def test_criterion_06_reference_motion_is_controlled_by_gradient_drift():
    cases = [
        (make_least_squares(seed=11), 60),
        (make_sparse_least_squares(seed=12), 60),
        (make_logistic(seed=13), 40),
        (make_performative(seed=14), 40),
    ]
    rng = np.random.default_rng(0)
    worst = -np.inf
    for problem, horizon in cases:
        stream = RngStream(21, problem.dim)
        for _ in range(horizon):
            problem.advance(stream)
        probe = rng.standard_normal(problem.dim)
        mu_eff = problem.mu - problem.sensitivity
        for _ in range(100):
            i, j = sorted(rng.choice(horizon + 1, size=2, replace=False))
            shift = problem.reference(int(i)).point - problem.reference(int(j)).point
            lhs = mu_eff * float(np.linalg.norm(shift))
            rhs = problem.gradient_drift_norm(int(i), int(j), probe)
            worst = max(worst, lhs - rhs)
    ok = worst <= 1e-9
    _report(
        6,
        ok,
        "strong-convexity times reference motion never exceeds the gradient "
        f"drift (worst slack {worst:.2e} over 400 pairs)",
    )
    assert worst <= 1e-9


def test_criterion_07_equilibria_and_sensitivity_zero_equivalence():
    problem = make_performative(seed=9)
    stream = RngStream(9, 1)
    for _ in range(7):
        problem.advance(stream)

    # Best responses contract at the sensitivity-to-curvature rate.
    y_prev = problem.initial_point() + 1.0
    y = problem.decision_argmin(4, y_prev)
    ratios = []
    for _ in range(12):
        y_next = problem.decision_argmin(4, y)
        num = float(np.linalg.norm(y_next - y))
        den = float(np.linalg.norm(y - y_prev))
        if den > 0.0:
            ratios.append(num / den)
        y_prev, y = y, y_next
    contraction_ok = bool(ratios) and max(ratios) <= 0.5 + 1e-6

    # Iterated equilibria land on the closed form.
    eq_err = 0.0
    for t in (0, 3, 7):
        fixed = compute_equilibrium(problem, t).point
        eq_err = max(
            eq_err, float(np.linalg.norm(fixed - problem.equilibrium_point(t)))
        )
    closed_form_ok = eq_err <= 1e-9

    # At sensitivity zero the decision-aware runs reproduce the plain ones.
    steps = np.full(30, 0.4)
    runs = {}
    for kind in ("psg", "dpsg", "averaged_psg", "averaged_dpsg"):
        fresh = make_performative(seed=5, sensitivity=0.0)
        runs[kind] = run(fresh, kind, steps, RngStream(5, 1))
    bitwise_ok = (
        np.array_equal(runs["psg"].iterates, runs["dpsg"].iterates)
        and np.array_equal(runs["averaged_psg"].iterates, runs["averaged_dpsg"].iterates)
        and np.array_equal(runs["averaged_psg"].averages, runs["averaged_dpsg"].averages)
    )

    ok = contraction_ok and closed_form_ok and bitwise_ok
    _report(
        7,
        ok,
        f"best responses contract at 0.5 (max ratio {max(ratios):.6f}), "
        f"equilibria match the closed form to {eq_err:.2e}, and "
        "sensitivity-zero runs are bitwise identical",
    )
    assert contraction_ok
    assert closed_form_ok
    assert bitwise_ok


def test_criterion_08_logistic_gap_stays_under_its_bound():
    config = ExperimentConfig.from_dict(
        {
            "problem": {"family": "logistic"},
            "algorithm": "averaged_psg",
            "schedule": {"kind": "constant"},
            "horizon": 600,
            "trials": 100,
            "seed": 0,
        }
    )
    start = time.monotonic()
    result = run_experiment(config, write=False)
    elapsed = time.monotonic() - start
    covered = bool((result.mean_gap <= result.bound_gap).all())
    fast = elapsed < 180.0
    ok = covered and fast
    _report(
        8,
        ok,
        "mean suboptimality gap under its bound at every step "
        f"(margin {np.min(result.bound_gap - result.mean_gap):.3g}, {elapsed:.1f}s)",
    )
    assert covered
    assert fast


def _mesh_argmin(point: np.ndarray, radius: float, center: np.ndarray,
                 half_width: float, spacing: float) -> np.ndarray:
    axes = [
        np.arange(center[k] - half_width, center[k] + half_width + 0.5 * spacing, spacing)
        for k in range(center.size)
    ]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, center.size)
    values = ((grid - point) ** 2).sum(axis=1)
    values[np.abs(grid).sum(axis=1) > radius + 1e-12] = np.inf
    return grid[int(np.argmin(values))]


def test_criterion_09_prox_agrees_with_brute_force_minimisation():
    rng = np.random.default_rng(42)
    radius = 1.0
    ball = Regularizer.l1_ball(radius)
    worst_ball = 0.0
    for _ in range(50):
        point = rng.uniform(-1.5, 1.5, size=3)
        projected = prox(ball, 0.7, point)
        assert np.array_equal(projected, project_l1_ball(point, radius))
        z = _mesh_argmin(point, radius, np.zeros(3), 1.0, 0.05)
        z = _mesh_argmin(point, radius, z, 0.15, 6e-3)
        z = _mesh_argmin(point, radius, z, 8e-3, 3.2e-4)
        worst_ball = max(worst_ball, float(np.linalg.norm(z - projected)))

    worst_soft = 0.0
    for _ in range(50):
        x = float(rng.uniform(-3.0, 3.0))
        thr = float(rng.uniform(0.01, 2.0))
        grid = np.arange(-4.0, 4.0 + 5e-4, 1e-3)
        z0 = grid[np.argmin(0.5 * (grid - x) ** 2 + thr * np.abs(grid))]
        fine = np.arange(z0 - 2e-3, z0 + 2e-3 + 5e-8, 1e-7)
        z1 = fine[np.argmin(0.5 * (fine - x) ** 2 + thr * np.abs(fine))]
        worst_soft = max(worst_soft, abs(float(z1) - float(soft_threshold(x, thr))))

    ok = worst_ball <= 5e-3 and worst_soft <= 1e-6
    _report(
        9,
        ok,
        f"ball projection within {worst_ball:.2e} and soft threshold within "
        f"{worst_soft:.2e} of grid minimisers",
    )
    assert worst_ball <= 5e-3
    assert worst_soft <= 1e-6


def test_criterion_10_reports_do_not_depend_on_the_thread_count(
    tmp_path, monkeypatch
):
    def run_with(workers: int):
        out = tmp_path / f"workers{workers}"
        monkeypatch.setenv(MAX_WORKERS_ENV, str(workers))
        config = ExperimentConfig.from_dict(
            {
                "problem": {"family": "least_squares", "dim": 12, "n_samples": 24},
                "algorithm": "psg",
                "schedule": {"kind": "constant", "eta": 0.3},
                "horizon": 30,
                "trials": 16,
                "seed": 0,
                "output_dir": str(out),
            }
        )
        run_experiment(config)
        return (out / "series.csv").read_bytes(), (out / "meta.json").read_bytes()

    serial = run_with(1)
    threaded = run_with(8)
    ok = serial[0] == threaded[0] and serial[1] == threaded[1]
    _report(10, ok, "series.csv and meta.json are byte-identical at 1 and 8 threads")
    assert serial[0] == threaded[0]
    assert serial[1] == threaded[1]
