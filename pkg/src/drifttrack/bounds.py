"""Closed-form tracking bounds for constant-step runs.

Distance bounds control the squared distance between the raw iterate and
the moving target; gap bounds control the suboptimality of the averaged
iterate.  Each function takes the same frozen parameter bundle and a time
index and returns the bound value, raising on parameter combinations the
underlying guarantee does not cover.  ``mu_eff`` is the curvature the bound
sees: the plain strong convexity for decision-independent problems, and the
sensitivity-discounted ``mu - sensitivity`` (distance) or
``mu - 2 * sensitivity`` (gap) otherwise, with ``mu`` carrying the
undiscounted value whenever the two differ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .schedules import steady_state_dist


@dataclass(frozen=True)
class BoundParams:
    """Constants a bound family needs, validated once at construction.

    ``d0`` is the initial value of whichever metric the bound controls
    (squared distance or gap).  ``initial_dist_sq`` is only consulted by the
    high-probability gap bound, whose fluctuation term also depends on how
    far the start point sits from the time-zero target.
    """

    mu_eff: float
    smoothness: float
    eta: float
    sigma: float
    delta_eff: float
    d0: float
    delta: float = 0.05
    c: float = 1.0
    mu: float | None = None
    initial_dist_sq: float = 0.0

    def __post_init__(self):
        if self.mu_eff <= 0.0:
            raise ParameterError("mu_eff must be positive")
        if self.smoothness < self.mu_eff:
            raise ParameterError("smoothness must be at least mu_eff")
        if self.eta <= 0.0:
            raise ParameterError("eta must be positive")
        if self.sigma < 0.0 or self.delta_eff < 0.0:
            raise ParameterError("sigma and delta_eff must be nonnegative")
        if self.d0 < 0.0 or self.initial_dist_sq < 0.0:
            raise ParameterError("initial metric values must be nonnegative")
        if not 0.0 < self.delta < 1.0:
            raise ParameterError("delta must lie in (0, 1)")
        if self.c <= 0.0:
            raise ParameterError("the noise factor c must be positive")
        if self.mu is not None and self.mu < self.mu_eff:
            raise ParameterError("mu must be at least mu_eff")

    @property
    def mu_full(self) -> float:
        return self.mu_eff if self.mu is None else self.mu

    @property
    def rho_hat(self) -> float:
        """Per-step contraction of the averaged gap: ``mu_eff*eta / (2 - mu*eta)``."""
        denom = 2.0 - self.mu_full * self.eta
        if denom <= 0.0:
            raise ParameterError("gap bounds need eta < 2 / mu")
        rho = self.mu_eff * self.eta / denom
        if rho >= 1.0:
            raise ParameterError("gap bounds need a contraction factor below 1")
        return rho

    def _require_small_step(self) -> None:
        if self.eta > 1.0 / (2.0 * self.smoothness):
            raise ParameterError("this bound requires eta <= 1 / (2 * smoothness)")

    def log_term(self, scale: float = 1.0) -> float:
        return math.log(scale * math.e / self.delta)


def dist_expectation(params: BoundParams, t: int) -> float:
    """Expected squared distance: geometric decay onto twice the steady state."""
    _check_time(t)
    params._require_small_step()
    decay = (1.0 - params.mu_eff * params.eta) ** t
    plateau = 2.0 * steady_state_dist(params.mu_eff, params.eta, params.sigma, params.delta_eff)
    return decay * params.d0 + plateau


def dist_highprob(params: BoundParams, t: int) -> float:
    """Squared distance holding with probability ``1 - delta`` at each step."""
    _check_time(t)
    params._require_small_step()
    decay = (1.0 - 0.5 * params.mu_eff * params.eta) ** t
    noise = 8.0 * params.eta * (params.c * params.sigma) ** 2 / params.mu_eff
    drift = 4.0 * (params.delta_eff / (params.mu_eff * params.eta)) ** 2
    return decay * params.d0 + (noise + drift) * params.log_term()


def gap_expectation(params: BoundParams, t: int) -> float:
    """Expected averaged-iterate gap under a constant step."""
    _check_time(t)
    params._require_small_step()
    rho = params.rho_hat
    plateau = params.eta * params.sigma**2 + 88.0 * params.delta_eff**2 / (
        params.mu_eff * params.eta**2
    )
    return 3.0 * (1.0 - rho) ** t * params.d0 + plateau


def gap_noise_energy(params: BoundParams, t: int) -> float:
    """Fluctuation energy entering the high-probability gap bound at step ``t``.

    Combines the decaying influence of the start point (which the drift can
    have carried ``delta_eff * t`` away from the current target) with the
    stationary noise and drift contributions.
    """
    if t < 1:
        raise ParameterError("the fluctuation energy is defined for t >= 1")
    rho = params.rho_hat
    noise_sq = (params.c * params.sigma) ** 2
    start = (1.0 - rho) ** (t - 1) * (
        params.initial_dist_sq + params.delta_eff**2 * t**2
    ) * 2.0 * noise_sq / rho
    stationary = 2.0 * params.eta**2 * noise_sq**2 / rho**2
    drift = 3.0 * params.mu_eff * params.delta_eff**2 * params.eta * noise_sq / rho**4
    return start + stationary + drift


def gap_highprob(params: BoundParams, t: int) -> float:
    """Averaged-iterate gap holding with probability ``1 - delta``, for ``t >= 1``."""
    if t < 1:
        raise ParameterError("the high-probability gap bound starts at t = 1")
    params._require_small_step()
    rho = params.rho_hat
    decay = 3.0 * (1.0 - rho) ** t * params.d0
    carried = (
        80.0 * params.delta_eff**2 / (params.mu_eff * params.eta**2)
    ) * params.log_term()
    fluctuation = (
        params.eta * (params.c * params.sigma) ** 2
        + 8.0 * params.delta_eff**2 / (params.mu_eff * params.eta**2)
        + 5.0 * rho * math.sqrt(8.0 * gap_noise_energy(params, t))
    ) * params.log_term(4.0)
    return decay + carried + fluctuation


def gap_highprob_simple(params: BoundParams, t: int) -> float:
    """Unrefined high-probability gap bound with a single leading constant."""
    _check_time(t)
    params._require_small_step()
    rho = params.rho_hat
    inner = (
        (1.0 - rho) ** t * params.d0
        + params.eta * params.sigma**2
        + params.delta_eff**2 / (params.mu_eff * params.eta**2)
    )
    return params.c * inner * params.log_term()


def _check_time(t: int) -> None:
    if t < 0:
        raise ParameterError("time indices must be nonnegative")


FAMILIES = {
    "dist_expectation": dist_expectation,
    "dist_highprob": dist_highprob,
    "gap_expectation": gap_expectation,
    "gap_highprob": gap_highprob,
    "gap_highprob_simple": gap_highprob_simple,
}


@dataclass(frozen=True)
class BoundCurve:
    """A bound evaluated over ``t = 0..horizon`` (NaN where undefined)."""

    name: str
    times: np.ndarray
    values: np.ndarray


def bound_curve(name: str, params: BoundParams, horizon: int) -> BoundCurve:
    """Evaluate one bound family over a whole horizon.

    Time steps outside the family's domain (t = 0 for the refined
    high-probability gap bound) come back as NaN rather than raising.
    """
    if name not in FAMILIES:
        raise ParameterError(f"unknown bound family {name!r}, expected one of {sorted(FAMILIES)}")
    if horizon < 0:
        raise ParameterError("horizon must be nonnegative")
    fn = FAMILIES[name]
    times = np.arange(horizon + 1)
    values = np.empty(horizon + 1)
    for t in times:
        try:
            values[t] = fn(params, int(t))
        except ParameterError:
            if t == 0 and name == "gap_highprob":
                values[t] = math.nan
            else:
                raise
    return BoundCurve(name, times, values)
