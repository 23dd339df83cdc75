"""Proximal stochastic gradient runners and their averaged variants.

All four kinds share one update: draw a stochastic gradient of the smooth
part, take a step, apply the prox of the regularizer, then let the problem
drift.  The averaged kinds additionally maintain a geometrically weighted
running average of the iterates.  The decision-aware kinds differ only in
validation and in the averaging weight, which discounts by the problem's
sensitivity; at sensitivity zero they reproduce the plain kinds bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ParameterError
from .problems import DriftingProblem
from .prox import prox

KINDS = ("psg", "averaged_psg", "dpsg", "averaged_dpsg")

_NORM_LIMIT = 1e150


def averaging_weight(mu: float, eta: float, sensitivity: float = 0.0) -> float:
    """Averaging weight ``(mu - 2*sensitivity) * eta / (2 - mu * eta)``.

    The weight multiplies the newest iterate in the running average.  It is
    positive and meaningful only when ``sensitivity < mu / 2`` and
    ``eta < 1 / (mu - sensitivity)``; both are enforced here.
    """
    if mu <= 0.0:
        raise ParameterError("mu must be positive")
    if eta <= 0.0:
        raise ParameterError("step size must be positive")
    if sensitivity < 0.0:
        raise ParameterError("sensitivity must be nonnegative")
    if 2.0 * sensitivity >= mu:
        raise ParameterError("averaging requires sensitivity below mu / 2")
    if eta * (mu - sensitivity) >= 1.0:
        raise ParameterError("averaging requires eta < 1 / (mu - sensitivity)")
    return (mu - 2.0 * sensitivity) * eta / (2.0 - mu * eta)


def averaged_path(start: np.ndarray, iterates: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Running average evaluated through its product form instead of recursion.

    ``iterates[i]`` is the point produced at step ``i + 1`` and ``weights[i]``
    its averaging weight.  Row ``t`` of the result equals
    ``gamma_t * (start + sum_i (weights[i] / gamma_{i+1}) * iterates[i])``
    with ``gamma_t`` the product of ``1 - weights[:t]``; row 0 is ``start``.
    Meant for cross-checking the recursion on short horizons: the running
    product underflows once ``t`` reaches a few thousand steps.
    """
    start = np.asarray(start, dtype=float)
    iterates = np.asarray(iterates, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if iterates.ndim != 2 or iterates.shape[0] != weights.shape[0]:
        raise ParameterError("need one weight per iterate row")
    if np.any(weights <= 0.0) or np.any(weights >= 1.0):
        raise ParameterError("averaging weights must lie in (0, 1)")
    gammas = np.cumprod(1.0 - weights)
    coeffs = (weights / gammas)[:, None] * iterates
    partial = np.cumsum(coeffs, axis=0)
    path = np.empty((weights.shape[0] + 1, start.shape[0]))
    path[0] = start
    path[1:] = gammas[:, None] * (start[None, :] + partial)
    return path


@dataclass
class Trajectory:
    """Everything a single run produced, indexed by time step."""

    kind: str
    step_sizes: np.ndarray
    iterates: np.ndarray
    averages: np.ndarray | None
    dist_sq: np.ndarray
    gap: np.ndarray

    @property
    def horizon(self) -> int:
        return self.step_sizes.shape[0]


def _validate_kind(problem: DriftingProblem, kind: str, steps: np.ndarray) -> None:
    if kind not in KINDS:
        raise ParameterError(f"unknown algorithm kind {kind!r}, expected one of {KINDS}")
    if steps.ndim != 1:
        raise ParameterError("step sizes must form a one-dimensional array")
    if steps.size and not np.all(steps > 0.0):
        raise ParameterError("all step sizes must be positive")
    gamma = problem.sensitivity
    if kind in ("psg", "averaged_psg") and gamma != 0.0:
        raise ParameterError(
            f"kind {kind!r} ignores decision dependence; use the decision-aware "
            "variants on problems with positive sensitivity"
        )
    if kind in ("dpsg", "averaged_dpsg") and gamma >= problem.mu:
        raise ParameterError("tracking requires sensitivity below mu")
    if kind == "averaged_psg" and steps.size and steps.max() * problem.mu >= 1.0:
        raise ParameterError("averaged runs require eta < 1 / mu")
    if kind == "averaged_dpsg":
        if 2.0 * gamma >= problem.mu:
            raise ParameterError("averaged tracking requires sensitivity below mu / 2")
        if steps.size and steps.max() * (problem.mu - gamma) >= 1.0:
            raise ParameterError("averaged tracking requires eta < 1 / (mu - sensitivity)")


def run(
    problem: DriftingProblem,
    kind: str,
    step_sizes,
    rng,
) -> Trajectory:
    """Run ``len(step_sizes)`` prox-gradient steps from the problem's start.

    The problem must be freshly built (at step 0).  Each step consumes the
    gradient draw first and the drift draw second, so a single stream per
    trial reproduces the run exactly.  Distances are measured between the raw
    iterate and the step's target; gaps evaluate the averaged point for the
    averaging kinds and the raw iterate otherwise.
    """
    steps = np.asarray(step_sizes, dtype=float)
    _validate_kind(problem, kind, steps)
    if problem.t != 0:
        raise ParameterError("runs must start from a problem at step 0")

    averaging = kind in ("averaged_psg", "averaged_dpsg")
    discount = problem.sensitivity if kind == "averaged_dpsg" else 0.0
    horizon = steps.shape[0]

    x = problem.initial_point()
    avg = x.copy() if averaging else None
    iterates = np.empty((horizon + 1, problem.dim))
    averages = np.empty((horizon + 1, problem.dim)) if averaging else None
    dist_sq = np.empty(horizon + 1)
    gap = np.empty(horizon + 1)

    def record(t: int) -> None:
        iterates[t] = x
        if averaging:
            averages[t] = avg
        target = problem.reference(t)
        offset = x - target.point
        dist_sq[t] = float(offset @ offset)
        probe = avg if averaging else x
        gap[t] = problem.objective(t, probe) - target.value

    for t in range(horizon):
        record(t)
        eta = steps[t]
        grad = problem.oracle_gradient(t, x, rng)
        x = prox(problem.regularizer, eta, x - eta * grad)
        if not np.all(np.isfinite(x)) or float(np.linalg.norm(x)) > _NORM_LIMIT:
            raise DivergenceError(f"iterate blew up at step {t}", step=t)
        if averaging:
            rho = averaging_weight(problem.mu, eta, discount)
            avg = (1.0 - rho) * avg + rho * x
        problem.advance(rng)
    record(horizon)

    return Trajectory(
        kind=kind,
        step_sizes=steps.copy(),
        iterates=iterates,
        averages=averages,
        dist_sq=dist_sq,
        gap=gap,
    )
