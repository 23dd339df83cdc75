"""Step-size selection: regime classification and step-decay schedules.

The steady-state tracking error of a constant step ``eta`` is
``eta * sigma**2 / mu + (delta / (mu * eta))**2``; its minimizer over
``(0, 1/(2L)]`` is the critical step.  When the drift-to-noise ratio is
small (the low-drift regime), halving schedules that walk the step from
``1/(2L)`` down toward the critical step reach the optimal steady state in
near-optimal time.  The four constructors below package the epoch lengths
for the distance and gap criteria, in expectation and at high probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, RegimeError

SCHEDULE_KINDS = (
    "constant",
    "decay_dist_expectation",
    "decay_dist_highprob",
    "decay_gap_expectation",
    "decay_gap_highprob",
)


def steady_state_dist(mu_eff: float, eta: float, sigma: float, delta_eff: float) -> float:
    """Plateau of the squared tracking distance under a constant step."""
    if mu_eff <= 0.0 or eta <= 0.0:
        raise ParameterError("mu_eff and eta must be positive")
    return eta * sigma**2 / mu_eff + (delta_eff / (mu_eff * eta)) ** 2


def critical_step(mu_eff: float, L: float, sigma: float, delta_eff: float) -> float:
    """Step size minimizing the steady state, capped at ``1 / (2L)``.

    Returns ``min(1/(2L), (2 * delta_eff**2 / (mu_eff * sigma**2))**(1/3))``.
    With ``sigma == 0`` the cap is returned; with ``delta_eff == 0`` the
    formula yields 0, signalling that no positive step is stationary-optimal.
    """
    _check_constants(mu_eff, L, sigma, delta_eff)
    if sigma == 0.0:
        return 1.0 / (2.0 * L)
    return min(1.0 / (2.0 * L), (2.0 * delta_eff**2 / (mu_eff * sigma**2)) ** (1.0 / 3.0))


def _check_constants(mu_eff: float, L: float, sigma: float, delta_eff: float) -> None:
    if mu_eff <= 0.0:
        raise ParameterError("mu_eff must be positive")
    if L < mu_eff:
        raise ParameterError("smoothness must be at least mu_eff")
    if sigma < 0.0 or delta_eff < 0.0:
        raise ParameterError("sigma and delta_eff must be nonnegative")


@dataclass(frozen=True)
class RegimeReport:
    """Outcome of comparing drift-to-noise against the regime threshold."""

    regime: str
    ratio: float
    threshold: float
    eta_star: float
    plateau_dist: float
    plateau_gap: float
    degenerate: bool = False


def classify_regime(mu_eff: float, L: float, sigma: float, delta_eff: float) -> RegimeReport:
    """Compare ``delta_eff / sigma`` against ``sqrt(mu_eff / (16 L**3))``.

    Below the threshold the critical step sits strictly under the ``1/(2L)``
    cap and decay schedules apply; at or above it the cap binds.  A zero
    ``sigma`` makes the ratio infinite (degenerate noiseless case, classified
    high by convention).
    """
    _check_constants(mu_eff, L, sigma, delta_eff)
    threshold = math.sqrt(mu_eff / (16.0 * L**3))
    eta_star = critical_step(mu_eff, L, sigma, delta_eff)
    if sigma == 0.0:
        ratio = math.inf
        plateau = (delta_eff / (mu_eff * eta_star)) ** 2
        return RegimeReport("high", ratio, threshold, eta_star, plateau, mu_eff * plateau, True)
    ratio = delta_eff / sigma
    regime = "high" if ratio >= threshold else "low"
    plateau = steady_state_dist(mu_eff, eta_star, sigma, delta_eff) if eta_star > 0.0 else 0.0
    return RegimeReport(regime, ratio, threshold, eta_star, plateau, mu_eff * plateau, False)


@dataclass(frozen=True)
class Schedule:
    """Per-epoch step sizes: ``epochs[k] = (eta_k, steps_k)``.

    A ``None`` step count marks an open-ended epoch, which is only valid in
    last position (constant schedules use a single open-ended epoch).
    ``params`` records the constants the constructor worked from, including
    the guaranteed final value where one is available.
    """

    kind: str
    epochs: tuple
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ParameterError(f"unknown schedule kind {self.kind!r}")
        if not self.epochs:
            raise ParameterError("a schedule needs at least one epoch")
        for i, (eta, steps) in enumerate(self.epochs):
            if eta <= 0.0:
                raise ParameterError("epoch step sizes must be positive")
            if steps is None:
                if i != len(self.epochs) - 1:
                    raise ParameterError("only the final epoch may be open-ended")
            elif int(steps) != steps or steps < 0:
                raise ParameterError("epoch lengths must be nonnegative integers")

    @property
    def total_steps(self) -> int | None:
        """Sum of epoch lengths, or ``None`` if the last epoch is open-ended."""
        total = 0
        for _, steps in self.epochs:
            if steps is None:
                return None
            total += steps
        return total

    def step_sizes(self, horizon: int | None = None) -> np.ndarray:
        """Expand the epochs into one step size per time step.

        Without a horizon the natural length is used (an error for
        open-ended schedules).  With one, the expansion is truncated or
        padded with the final epoch's step size to exactly fit.
        """
        total = self.total_steps
        if horizon is None:
            if total is None:
                raise ParameterError("an open-ended schedule needs an explicit horizon")
            horizon = total
        elif horizon < 0:
            raise ParameterError("horizon must be nonnegative")
        pieces = []
        remaining = horizon
        for eta, steps in self.epochs:
            length = remaining if steps is None else min(steps, remaining)
            pieces.append(np.full(length, eta))
            remaining -= length
            if remaining == 0:
                break
        if remaining > 0:
            pieces.append(np.full(remaining, self.epochs[-1][0]))
        return np.concatenate(pieces) if pieces else np.empty(0)

    @staticmethod
    def constant(eta: float) -> "Schedule":
        if eta <= 0.0:
            raise ParameterError("step size must be positive")
        return Schedule("constant", ((float(eta), None),), {"eta": float(eta)})


def _decay_preamble(mu_eff: float, L: float, sigma: float, delta_eff: float):
    """Shared validation and epoch step sizes for every decay constructor.

    Returns ``(eta_star, [eta_0, ..., eta_{K-1}])`` where ``eta_0 = 1/(2L)``
    and each later step halves the remaining distance to ``eta_star``.
    """
    _check_constants(mu_eff, L, sigma, delta_eff)
    if sigma == 0.0 or delta_eff == 0.0:
        raise ParameterError("decay schedules need positive sigma and delta_eff")
    report = classify_regime(mu_eff, L, sigma, delta_eff)
    if report.regime == "high":
        raise RegimeError(
            f"drift-to-noise ratio {report.ratio:.6g} is above the threshold "
            f"{report.threshold:.6g}; decay schedules only apply in the low regime"
        )
    eta_star = (2.0 * delta_eff**2 / (mu_eff * sigma**2)) ** (1.0 / 3.0)
    eta0 = 1.0 / (2.0 * L)
    n_epochs = 1 + math.ceil(math.log2((sigma**2 * mu_eff / delta_eff**2) ** (1.0 / 3.0) / L))
    etas = [eta0] + [eta_star + (eta0 - eta_star) * 0.5**k for k in range(1, n_epochs)]
    return eta_star, etas


def _positive_log(x: float) -> float:
    return max(math.log(x), 0.0) if x > 0.0 else 0.0


def decay_dist_expectation(
    mu_eff: float, L: float, sigma: float, delta_eff: float, initial_dist_sq: float
) -> Schedule:
    """Schedule driving the expected squared distance to its floor.

    The burn-in epoch runs ``ceil((2L/mu_eff) * log⁺(mu_eff * L * D / sigma²))``
    steps at ``1/(2L)``; each later epoch runs ``ceil(log(4) / (mu_eff * eta_k))``
    steps.  The final expected squared distance is guaranteed at most
    ``2 * (1 + 54**(1/3)) * (delta_eff * sigma**2 / mu_eff**2)**(2/3)``.
    """
    if initial_dist_sq < 0.0:
        raise ParameterError("initial_dist_sq must be nonnegative")
    eta_star, etas = _decay_preamble(mu_eff, L, sigma, delta_eff)
    t0 = math.ceil(
        (2.0 * L / mu_eff) * _positive_log(mu_eff * L * initial_dist_sq / sigma**2)
    )
    lengths = [t0] + [math.ceil(math.log(4.0) / (mu_eff * eta)) for eta in etas[1:]]
    final = 2.0 * (1.0 + 54.0 ** (1.0 / 3.0)) * (delta_eff * sigma**2 / mu_eff**2) ** (2.0 / 3.0)
    params = {
        "mu_eff": mu_eff,
        "smoothness": L,
        "sigma": sigma,
        "delta_eff": delta_eff,
        "initial_dist_sq": initial_dist_sq,
        "eta_star": eta_star,
        "final_guarantee": final,
    }
    return Schedule(
        "decay_dist_expectation",
        tuple((eta, steps) for eta, steps in zip(etas, lengths)),
        params,
    )


def decay_dist_highprob(
    mu_eff: float, L: float, sigma: float, delta_eff: float, initial_dist_sq: float
) -> Schedule:
    """High-probability variant of the distance decay schedule.

    Burn-in length doubles to ``ceil((4L/mu_eff) * log⁺(...))`` and later
    epochs run ``ceil(2 * log(12) / (mu_eff * eta_k))`` steps.  The final
    squared distance is O(noise floor times ``log(e/delta)``) with
    probability ``1 - delta`` for every ``delta`` at once, so no failure
    level is baked into the schedule itself.
    """
    if initial_dist_sq < 0.0:
        raise ParameterError("initial_dist_sq must be nonnegative")
    eta_star, etas = _decay_preamble(mu_eff, L, sigma, delta_eff)
    t0 = math.ceil(
        (4.0 * L / mu_eff) * _positive_log(mu_eff * L * initial_dist_sq / sigma**2)
    )
    lengths = [t0] + [math.ceil(2.0 * math.log(12.0) / (mu_eff * eta)) for eta in etas[1:]]
    params = {
        "mu_eff": mu_eff,
        "smoothness": L,
        "sigma": sigma,
        "delta_eff": delta_eff,
        "initial_dist_sq": initial_dist_sq,
        "eta_star": eta_star,
    }
    return Schedule(
        "decay_dist_highprob",
        tuple((eta, steps) for eta, steps in zip(etas, lengths)),
        params,
    )


def decay_gap_expectation(
    mu_eff: float, L: float, sigma: float, delta_eff: float, initial_gap: float
) -> Schedule:
    """Schedule driving the expected averaged-iterate gap to its floor.

    Here ``mu_eff`` is the gap-criterion curvature (``mu - 2 * sensitivity``
    for decision-dependent problems) and the target step is
    ``(2 * delta_eff**2 / (mu_eff * sigma**2))**(1/3)``.  Burn-in runs
    ``ceil((4L/mu_eff) * log⁺(L * D / sigma**2))`` steps (note: no
    ``mu_eff`` factor inside the log); later epochs run
    ``ceil(2 * log(12) / (mu_eff * eta_k))``.  The final expected gap is at
    most ``11 * (1/2 + 250**(1/3)) * mu_eff *
    (delta_eff * sigma**2 / mu_eff**2)**(2/3)``.
    """
    if initial_gap < 0.0:
        raise ParameterError("initial_gap must be nonnegative")
    eta_star, etas = _decay_preamble(mu_eff, L, sigma, delta_eff)
    t0 = math.ceil((4.0 * L / mu_eff) * _positive_log(L * initial_gap / sigma**2))
    lengths = [t0] + [math.ceil(2.0 * math.log(12.0) / (mu_eff * eta)) for eta in etas[1:]]
    final = (
        11.0
        * (0.5 + 250.0 ** (1.0 / 3.0))
        * mu_eff
        * (delta_eff * sigma**2 / mu_eff**2) ** (2.0 / 3.0)
    )
    params = {
        "mu_eff": mu_eff,
        "smoothness": L,
        "sigma": sigma,
        "delta_eff": delta_eff,
        "initial_gap": initial_gap,
        "eta_star": eta_star,
        "final_guarantee": final,
    }
    return Schedule(
        "decay_gap_expectation",
        tuple((eta, steps) for eta, steps in zip(etas, lengths)),
        params,
    )


def decay_gap_highprob(
    mu_eff: float,
    L: float,
    sigma: float,
    delta_eff: float,
    initial_gap: float,
    delta: float,
    c: float = 1.0,
) -> Schedule:
    """High-probability variant of the gap decay schedule.

    Later epochs run ``ceil(2 * log⁺(4c * log(e/delta)) / (mu_eff * eta_k))``
    steps, where ``c`` is the concentration constant of the underlying bound.
    The guarantee holds with probability ``1 - K * delta`` (one ``delta`` per
    epoch), recorded in the params as ``failure_prob``.
    """
    if initial_gap < 0.0:
        raise ParameterError("initial_gap must be nonnegative")
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1)")
    if c <= 0.0:
        raise ParameterError("the concentration constant c must be positive")
    eta_star, etas = _decay_preamble(mu_eff, L, sigma, delta_eff)
    t0 = math.ceil((4.0 * L / mu_eff) * _positive_log(L * initial_gap / sigma**2))
    inner = _positive_log(4.0 * c * math.log(math.e / delta))
    lengths = [t0] + [math.ceil(2.0 * inner / (mu_eff * eta)) for eta in etas[1:]]
    params = {
        "mu_eff": mu_eff,
        "smoothness": L,
        "sigma": sigma,
        "delta_eff": delta_eff,
        "initial_gap": initial_gap,
        "eta_star": eta_star,
        "delta": delta,
        "c": c,
        "failure_prob": len(etas) * delta,
    }
    return Schedule(
        "decay_gap_highprob",
        tuple((eta, steps) for eta, steps in zip(etas, lengths)),
        params,
    )
