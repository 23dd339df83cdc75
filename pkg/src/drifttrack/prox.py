"""Closed-form proximal maps for the regularizers used by the solvers.

Supported regularizers: the zero function, an l1 penalty, a squared-l2
penalty, and the indicator of an l1 ball.  Every prox here is exact (no inner
iteration), which is what makes the projected/proximal updates cheap enough
to run tens of thousands of steps per experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = ["Regularizer", "prox", "soft_threshold", "project_l1_ball"]

_KINDS = ("zero", "l1", "squared_l2", "l1_ball")

# Feasibility slack for the l1 ball: points within one part in 1e12 of the
# boundary count as inside, which makes the projection exactly idempotent in
# floating point (re-projecting a projected point returns it unchanged).
_BALL_SLACK = 1e-12


@dataclass(frozen=True)
class Regularizer:
    """A proximable regularizer r(x).

    ``strength`` is the penalty weight for the ``l1`` (lambda * ||x||_1) and
    ``squared_l2`` ((lambda / 2) * ||x||^2) kinds; ``radius`` is the l1-ball
    radius for the indicator kind.
    """

    kind: str
    strength: float = 0.0
    radius: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown regularizer kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind in ("l1", "squared_l2") and self.strength < 0:
            raise ParameterError("penalty strength must be >= 0")
        if self.kind == "l1_ball" and self.radius < 0:
            raise ParameterError("l1 ball radius must be >= 0")

    @staticmethod
    def zero() -> "Regularizer":
        return Regularizer("zero")

    @staticmethod
    def l1(strength: float) -> "Regularizer":
        return Regularizer("l1", strength=strength)

    @staticmethod
    def squared_l2(strength: float) -> "Regularizer":
        return Regularizer("squared_l2", strength=strength)

    @staticmethod
    def l1_ball(radius: float) -> "Regularizer":
        return Regularizer("l1_ball", radius=radius)

    def value(self, x: np.ndarray) -> float:
        """r(x); the l1-ball indicator is 0 inside (with the same slack the
        projection uses) and +inf outside."""
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return 0.0
        if self.kind == "l1":
            return self.strength * float(np.abs(x).sum())
        if self.kind == "squared_l2":
            return 0.5 * self.strength * float(x @ x)
        slack = _BALL_SLACK * max(1.0, self.radius)
        if float(np.abs(x).sum()) <= self.radius + slack:
            return 0.0
        return math.inf


def soft_threshold(point: np.ndarray, threshold: float) -> np.ndarray:
    """Shrink each coordinate toward zero by ``threshold``; entries with
    magnitude exactly at the threshold land on zero."""
    if threshold < 0:
        raise ParameterError("threshold must be >= 0")
    point = np.asarray(point, dtype=float)
    return np.sign(point) * np.maximum(np.abs(point) - threshold, 0.0)


def project_l1_ball(point: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto ``{u : ||u||_1 <= radius}``.

    Sort-based thresholding, O(d log d).  Feasible inputs (within the
    idempotence slack) are returned as an unchanged copy.
    """
    if radius < 0:
        raise ParameterError("radius must be >= 0")
    point = np.asarray(point, dtype=float)
    if radius == 0.0:
        return np.zeros_like(point)
    magnitudes = np.abs(point)
    total = float(magnitudes.sum())
    if total <= radius + _BALL_SLACK * max(1.0, radius):
        return point.copy()
    dropped = np.sort(magnitudes)[::-1]
    cumulative = np.cumsum(dropped)
    counts = np.arange(1, dropped.size + 1)
    thresholds = (cumulative - radius) / counts
    support = np.nonzero(dropped > thresholds)[0]
    theta = float(thresholds[support[-1]])
    return np.sign(point) * np.maximum(magnitudes - theta, 0.0)


def prox(regularizer: Regularizer, step: float, point: np.ndarray) -> np.ndarray:
    """The proximal map ``argmin_u r(u) + ||u - point||^2 / (2 step)``.

    zero: identity.  l1: soft threshold at ``step * strength``.  squared_l2:
    scale by ``1 / (1 + step * strength)``.  l1_ball: projection (independent
    of ``step``, bit-for-bit).
    """
    if step <= 0:
        raise ParameterError("prox step must be > 0")
    point = np.asarray(point, dtype=float)
    if regularizer.kind == "zero":
        return point.copy()
    if regularizer.kind == "l1":
        return soft_threshold(point, step * regularizer.strength)
    if regularizer.kind == "squared_l2":
        return point / (1.0 + step * regularizer.strength)
    return project_l1_ball(point, regularizer.radius)
