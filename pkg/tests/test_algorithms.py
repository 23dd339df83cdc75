import numpy as np
import pytest

from drifttrack.algorithms import averaged_path, averaging_weight, run
from drifttrack.errors import DivergenceError, ParameterError
from drifttrack.mathkit import RngStream
from drifttrack.problems import make_least_squares, make_performative, make_sparse_least_squares


def test_averaging_weight_pinned_values():
    assert averaging_weight(1.0, 0.5) == pytest.approx(1.0 / 3.0)
    assert averaging_weight(1.0, 0.5, sensitivity=0.25) == pytest.approx(1.0 / 6.0)


def test_averaging_weight_validation():
    with pytest.raises(ParameterError):
        averaging_weight(1.0, 1.0)
    with pytest.raises(ParameterError):
        averaging_weight(1.0, 0.5, sensitivity=0.5)
    with pytest.raises(ParameterError):
        averaging_weight(1.0, 1.5, sensitivity=0.3)
    with pytest.raises(ParameterError):
        averaging_weight(0.0, 0.5)


def test_run_contracts_toward_the_target():
    p = make_least_squares(dim=10, n_samples=20, noise_bound=0.5, drift_bound=0.01, seed=0)
    traj = run(p, "psg", [0.4] * 120, RngStream(0, 0))
    assert traj.dist_sq[-1] < 0.05 * traj.dist_sq[0]
    assert traj.iterates.shape == (121, 10)
    assert traj.gap.shape == (121,)
    assert traj.averages is None


def test_run_is_deterministic_per_stream():
    steps = [0.3] * 25
    t1 = run(make_least_squares(seed=2), "psg", steps, RngStream(5, 1))
    t2 = run(make_least_squares(seed=2), "psg", steps, RngStream(5, 1))
    np.testing.assert_array_equal(t1.iterates, t2.iterates)
    t3 = run(make_least_squares(seed=2), "psg", steps, RngStream(5, 2))
    assert np.abs(t1.iterates[-1] - t3.iterates[-1]).max() > 1e-8


def test_averaged_recursion_agrees_with_product_form():
    p = make_least_squares(dim=8, n_samples=16, seed=3)
    steps = np.linspace(0.5, 0.25, 30)
    traj = run(p, "averaged_psg", steps, RngStream(7, 0))
    weights = np.array([averaging_weight(p.mu, eta) for eta in steps])
    direct = averaged_path(traj.iterates[0], traj.iterates[1:], weights)
    assert np.abs(direct - traj.averages).max() < 1e-12


def test_gap_is_evaluated_at_the_averaged_point():
    p = make_least_squares(dim=6, n_samples=10, seed=4)
    traj = run(p, "averaged_psg", [0.3] * 10, RngStream(8, 0))
    check = make_least_squares(dim=6, n_samples=10, seed=4)
    # Recompute the time-5 gap from scratch on an identical problem.
    rng = RngStream(8, 0)
    replay = run(check, "averaged_psg", [0.3] * 5, rng)
    ref = check.reference(5)
    manual = check.objective(5, replay.averages[5]) - ref.value
    assert traj.gap[5] == pytest.approx(manual, rel=1e-12)


def test_plain_kinds_refuse_decision_dependent_problems():
    p = make_performative(sensitivity=0.4, seed=0)
    with pytest.raises(ParameterError):
        run(p, "psg", [0.3] * 5, RngStream(0, 0))
    with pytest.raises(ParameterError):
        run(p, "averaged_psg", [0.3] * 5, RngStream(0, 0))


def test_decision_kind_validation():
    p = make_performative(sensitivity=0.6, seed=0)
    with pytest.raises(ParameterError):
        run(p, "averaged_dpsg", [0.3] * 5, RngStream(0, 0))
    run(p, "dpsg", [0.3] * 5, RngStream(0, 0))
    q = make_performative(sensitivity=0.3, seed=0)
    with pytest.raises(ParameterError):
        # eta must stay below 1 / (mu - sensitivity).
        run(q, "averaged_dpsg", [1.5] * 5, RngStream(0, 0))
    with pytest.raises(ParameterError):
        run(q, "averaged_dpsg", [0.3, -0.1], RngStream(0, 0))
    with pytest.raises(ParameterError):
        run(q, "dogleg", [0.3] * 5, RngStream(0, 0))


def test_run_requires_a_fresh_problem():
    p = make_least_squares(dim=5, n_samples=8, seed=5)
    p.advance(RngStream(1, 0))
    with pytest.raises(ParameterError):
        run(p, "psg", [0.3] * 3, RngStream(1, 0))


def test_divergence_is_reported_with_its_step():
    p = make_least_squares(dim=5, n_samples=8, seed=6)
    with pytest.raises(DivergenceError) as err:
        run(p, "psg", [50.0] * 400, RngStream(2, 0))
    assert err.value.step is not None
    assert 0 <= err.value.step < 400


def test_constraint_is_respected_along_the_path():
    p = make_sparse_least_squares(seed=7)
    traj = run(p, "psg", [0.3] * 60, RngStream(3, 0))
    assert np.abs(traj.iterates[1:]).sum(axis=1).max() <= 1.0 + 1e-12
    assert np.isfinite(traj.gap).all()


def test_averaged_path_validation():
    with pytest.raises(ParameterError):
        averaged_path(np.zeros(2), np.zeros((3, 2)), np.array([0.2, 0.2]))
    with pytest.raises(ParameterError):
        averaged_path(np.zeros(2), np.zeros((2, 2)), np.array([0.2, 1.2]))
