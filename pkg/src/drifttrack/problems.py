"""Drifting problem families with known or solver-verified references.

Each problem owns its static data (drawn once from a dedicated init stream)
and a per-time-step state that callers move forward with :meth:`advance`.
Gradient oracles are stochastic; ``full_gradient`` and ``objective`` are the
noiseless counterparts used by solvers and diagnostics.  Time is explicit
everywhere: an oracle call must quote the problem's current step, and
lookups of past states go through a bounded history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    HistoryError,
    OutOfSyncError,
    ParameterError,
    SolverError,
)
from .mathkit import RngStream, matrix_with_spectrum, sample_l1_ball, sample_sphere
from .prox import Regularizer, prox

# Stream id reserved for drawing static problem data (design matrices,
# initial points, initial targets).  Trial streams use small ids, so any
# id >= 2**32 never collides with them under the same seed.
INIT_STREAM_ID = 1 << 32

_FAMILIES = ("least_squares", "sparse_least_squares", "logistic", "performative")


@dataclass(frozen=True)
class ReferenceSolution:
    """A target point together with its objective value."""

    point: np.ndarray
    value: float


class _History:
    """Append-only record of per-step states with optional eviction."""

    def __init__(self, window: int | None = None):
        if window is not None and window < 1:
            raise ParameterError("history window must be a positive integer or None")
        self._window = window
        self._items: list = []
        self._start = 0

    def append(self, item) -> None:
        self._items.append(item)
        if self._window is not None and len(self._items) > self._window:
            excess = len(self._items) - self._window
            del self._items[:excess]
            self._start += excess

    @property
    def latest_index(self) -> int:
        return self._start + len(self._items) - 1

    def get(self, t: int):
        if t > self.latest_index:
            raise ParameterError(
                f"time {t} has not been reached yet (current step is {self.latest_index})"
            )
        if t < self._start:
            raise HistoryError(
                f"state at time {t} was evicted (history keeps the last {self._window} steps)"
            )
        return self._items[t - self._start]


class DriftingProblem:
    """Common bookkeeping for all problem families.

    Subclasses populate the constants (``dim``, ``mu``, ``smoothness``,
    ``noise_bound``, ``drift_bound``, ``sensitivity``, ``regularizer``)
    and implement the stateful pieces.
    """

    family = "abstract"

    dim: int
    mu: float
    smoothness: float
    noise_bound: float
    drift_bound: float
    sensitivity: float
    regularizer: Regularizer

    def __init__(self, history_window: int | None = None):
        self._t = 0
        self._history_window = history_window

    @property
    def t(self) -> int:
        """Index of the current time step (starts at 0)."""
        return self._t

    @property
    def history_window(self) -> int | None:
        return self._history_window

    def _require_current(self, t: int) -> None:
        if t != self._t:
            raise OutOfSyncError(
                f"oracle queried at time {t} but the problem is at step {self._t}"
            )

    def initial_point(self) -> np.ndarray:
        raise NotImplementedError

    def advance(self, rng) -> None:
        """Move the problem from step ``t`` to ``t + 1``."""
        raise NotImplementedError

    def oracle_gradient(self, t: int, x: np.ndarray, rng) -> np.ndarray:
        """One stochastic gradient of the smooth part at the current step."""
        raise NotImplementedError

    def full_gradient(self, t: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def objective(self, t: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def reference(self, t: int) -> ReferenceSolution:
        """Target point and optimal value at step ``t`` (current or retained past)."""
        raise NotImplementedError

    def decision_argmin(self, t: int, y: np.ndarray) -> np.ndarray:
        """Minimizer of the objective induced by deploying decision ``y``.

        Families without decision dependence ignore ``y`` and return the
        step-``t`` target, so fixed-point iteration on this map lands on the
        ordinary minimizer in one step.
        """
        raise NotImplementedError

    def gradient_drift_norm(self, i: int, t: int, x: np.ndarray) -> float:
        """Norm of the gradient change between steps ``i`` and ``t`` at ``x``.

        For every family implemented here the change is constant in ``x``,
        which makes the per-pair supremum exact rather than sampled.
        """
        raise NotImplementedError


def _as_point(x, dim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (dim,):
        raise ParameterError(f"expected a point of shape ({dim},), got {arr.shape}")
    return arr


class LeastSquaresProblem(DriftingProblem):
    """Gaussian-noise least squares with a minimizer on a random walk.

    The loss at step ``t`` is ``0.5 * E||A x - y_t||^2`` with
    ``y_t = A x*_t + xi``, ``xi ~ N(0, nu * I_n)``.  The minimizer moves by a
    uniformly random step of length ``drift_bound`` on the sphere.
    """

    family = "least_squares"

    def __init__(
        self,
        design: np.ndarray,
        start_point: np.ndarray,
        minimizer0: np.ndarray,
        mu: float,
        smoothness: float,
        noise_bound: float,
        drift_bound: float,
        history_window: int | None = None,
    ):
        super().__init__(history_window)
        self.design = design
        self.n_samples, self.dim = design.shape
        self.mu = float(mu)
        self.smoothness = float(smoothness)
        self.noise_bound = float(noise_bound)
        self.drift_bound = float(drift_bound)
        self.sensitivity = 0.0
        self.regularizer = Regularizer.zero()
        self._gram = design.T @ design
        # With per-sample variance sigma^2 / (n L) the gradient noise has
        # second moment sigma^2 * tr(A^T A) / (n L) <= sigma^2, so the
        # configured noise_bound really does bound the oracle error.
        self._noise_variance = noise_bound**2 / (self.n_samples * smoothness)
        self._trace_term = 0.5 * self.n_samples * self._noise_variance
        self._start = np.array(start_point, dtype=float)
        self._minimizers = _History(history_window)
        self._minimizers.append(np.array(minimizer0, dtype=float))

    def initial_point(self) -> np.ndarray:
        return self._start.copy()

    def minimizer(self, t: int) -> np.ndarray:
        return self._minimizers.get(t).copy()

    def advance(self, rng) -> None:
        current = self._minimizers.get(self._t)
        step = sample_sphere(self.dim, self.drift_bound, rng)
        self._minimizers.append(current + step)
        self._t += 1

    def oracle_gradient(self, t: int, x: np.ndarray, rng) -> np.ndarray:
        self._require_current(t)
        x = _as_point(x, self.dim)
        target = self._minimizers.get(t)
        gen = rng.gen if isinstance(rng, RngStream) else rng
        noise = math.sqrt(self._noise_variance) * gen.standard_normal(self.n_samples)
        observed = self.design @ target + noise
        return self.design.T @ (self.design @ x - observed)

    def full_gradient(self, t: int, x: np.ndarray) -> np.ndarray:
        x = _as_point(x, self.dim)
        return self._gram @ (x - self._minimizers.get(t))

    def objective(self, t: int, x: np.ndarray) -> float:
        x = _as_point(x, self.dim)
        residual = self.design @ (x - self._minimizers.get(t))
        return 0.5 * float(residual @ residual) + self._trace_term + self.regularizer.value(x)

    def reference(self, t: int) -> ReferenceSolution:
        return ReferenceSolution(self._minimizers.get(t).copy(), self._trace_term)

    def decision_argmin(self, t: int, y: np.ndarray) -> np.ndarray:
        return self._minimizers.get(t).copy()

    def gradient_drift_norm(self, i: int, t: int, x: np.ndarray) -> float:
        shift = self._minimizers.get(i) - self._minimizers.get(t)
        return float(np.linalg.norm(self._gram @ shift))


class SparseLeastSquaresProblem(LeastSquaresProblem):
    """Least squares constrained to the unit l1 ball with a sparse target.

    The target stays inside the ball.  Most steps move it by
    ``drift_bound / sqrt(2)`` along a random direction within its current
    support; occasionally (with probability ``drift_bound**2 / (4 -
    drift_bound**2)``) one nonzero value teleports to a random zero
    coordinate instead, changing which coordinates are active.  References
    are re-derived with a projected-gradient solve and must agree with the
    tracked target.
    """

    family = "sparse_least_squares"

    _SOLVE_TOL = 1e-9
    _AGREE_TOL = 1e-6
    _MAX_SOLVE_ITERS = 200_000
    _MAX_RESAMPLES = 100

    def __init__(
        self,
        design: np.ndarray,
        start_point: np.ndarray,
        minimizer0: np.ndarray,
        mu: float,
        smoothness: float,
        noise_bound: float,
        drift_bound: float,
        history_window: int | None = None,
    ):
        super().__init__(
            design,
            start_point,
            minimizer0,
            mu,
            smoothness,
            noise_bound,
            drift_bound,
            history_window,
        )
        self.regularizer = Regularizer.l1_ball(1.0)
        d2 = drift_bound**2
        self._in_support_prob = (4.0 - 2.0 * d2) / (4.0 - d2)
        self._verified: set[int] = set()

    def _walk_in_support(self, current: np.ndarray, rng) -> np.ndarray | None:
        support = np.flatnonzero(current)
        if support.size == 0:
            return None
        length = self.drift_bound / math.sqrt(2.0)
        for _ in range(self._MAX_RESAMPLES):
            move = sample_sphere(support.size, length, rng)
            candidate = current.copy()
            candidate[support] += move
            if np.abs(candidate).sum() <= 1.0:
                return candidate
        # All resamples left the ball: shrink toward the origin instead.
        scale = float(np.linalg.norm(current))
        if scale == 0.0:
            return None
        candidate = current - (length / scale) * current
        if np.abs(candidate).sum() <= 1.0:
            return candidate
        return None

    def _walk_swap(self, current: np.ndarray, rng) -> np.ndarray:
        gen = rng.gen if isinstance(rng, RngStream) else rng
        support = np.flatnonzero(current)
        zeros = np.flatnonzero(current == 0.0)
        if support.size == 0 or zeros.size == 0:
            return current.copy()
        src = support[int(gen.integers(support.size))]
        dst = zeros[int(gen.integers(zeros.size))]
        moved = current.copy()
        moved[dst] = moved[src]
        moved[src] = 0.0
        return moved

    def advance(self, rng) -> None:
        current = self._minimizers.get(self._t)
        gen = rng.gen if isinstance(rng, RngStream) else rng
        candidate = None
        if gen.uniform() < self._in_support_prob:
            candidate = self._walk_in_support(current, rng)
        if candidate is None:
            candidate = self._walk_swap(current, rng)
        self._minimizers.append(candidate)
        self._t += 1

    def _solve_constrained(self, target: np.ndarray) -> np.ndarray:
        """Projected gradient on 0.5||A(z - target)||^2 over the unit l1 ball."""
        step = 1.0 / self.smoothness
        z = np.zeros(self.dim)
        for _ in range(self._MAX_SOLVE_ITERS):
            z_next = prox(self.regularizer, step, z - step * (self._gram @ (z - target)))
            if np.linalg.norm(z_next - z) <= self._SOLVE_TOL:
                return z_next
            z = z_next
        raise SolverError("projected gradient did not converge while checking a target")

    def reference(self, t: int) -> ReferenceSolution:
        target = self._minimizers.get(t)
        if t not in self._verified:
            solved = self._solve_constrained(target)
            gap = float(np.linalg.norm(solved - target))
            if gap > self._AGREE_TOL:
                raise SolverError(
                    f"tracked target at time {t} is off the constrained optimum by {gap:.3e}"
                )
            self._verified.add(t)
        return ReferenceSolution(target.copy(), self._trace_term)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_noise_second_moment(features: np.ndarray) -> float:
    """Worst-case second moment of the single-sample logistic gradient error.

    For a uniformly sampled row the error against the averaged gradient has
    squared norm at most ``((n - 2) * sum ||a_i||^2 + (sum ||a_i||)^2) / n^2``
    uniformly over labels and query points.
    """
    n = features.shape[0]
    row_norms = np.linalg.norm(features, axis=1)
    return ((n - 2) * float(row_norms @ row_norms) + float(row_norms.sum()) ** 2) / n**2


class LogisticRegressionProblem(DriftingProblem):
    """l2-regularized logistic regression where one label flips per step.

    References are produced by a damped Newton solve (Armijo backtracking)
    run to gradient norm 1e-10 and cached per step; consecutive steps warm
    start from the previous solution.
    """

    family = "logistic"

    _GRAD_TOL = 1e-10
    _MAX_NEWTON_ITERS = 100

    def __init__(
        self,
        features: np.ndarray,
        start_point: np.ndarray,
        labels0: np.ndarray,
        mu: float,
        history_window: int | None = None,
    ):
        super().__init__(history_window)
        self.features = features
        self.n_samples, self.dim = features.shape
        self.mu = float(mu)
        spectral = float(np.linalg.norm(features, 2))
        self.smoothness = spectral**2 / (4.0 * self.n_samples) + self.mu
        row_norms = np.linalg.norm(features, axis=1)
        self.drift_bound = float(row_norms.max()) / (self.mu * self.n_samples)
        self.noise_bound = math.sqrt(logistic_noise_second_moment(features))
        self.sensitivity = 0.0
        self.regularizer = Regularizer.zero()
        self._start = np.array(start_point, dtype=float)
        labels = np.array(labels0, dtype=float)
        if labels.shape != (self.n_samples,) or not np.isin(labels, (0.0, 1.0)).all():
            raise ParameterError("labels must be a 0/1 vector matching the feature rows")
        self._labels = _History(history_window)
        self._labels.append(labels)
        self._references: dict[int, ReferenceSolution] = {}
        self._last_solution = self._start.copy()

    def initial_point(self) -> np.ndarray:
        return self._start.copy()

    def labels(self, t: int) -> np.ndarray:
        return self._labels.get(t).copy()

    def advance(self, rng) -> None:
        gen = rng.gen if isinstance(rng, RngStream) else rng
        current = self._labels.get(self._t)
        flip = int(gen.integers(self.n_samples))
        updated = current.copy()
        updated[flip] = 1.0 - updated[flip]
        self._labels.append(updated)
        self._t += 1

    def oracle_gradient(self, t: int, x: np.ndarray, rng) -> np.ndarray:
        self._require_current(t)
        x = _as_point(x, self.dim)
        gen = rng.gen if isinstance(rng, RngStream) else rng
        k = int(gen.integers(self.n_samples))
        row = self.features[k]
        labels = self._labels.get(t)
        margin = _sigmoid(np.array([row @ x]))[0]
        return (margin - labels[k]) * row + self.mu * x

    def full_gradient(self, t: int, x: np.ndarray) -> np.ndarray:
        x = _as_point(x, self.dim)
        return self._full_gradient_for(self._labels.get(t), x)

    def _full_gradient_for(self, labels: np.ndarray, x: np.ndarray) -> np.ndarray:
        probs = _sigmoid(self.features @ x)
        return self.features.T @ (probs - labels) / self.n_samples + self.mu * x

    def objective(self, t: int, x: np.ndarray) -> float:
        x = _as_point(x, self.dim)
        return self._objective_for(self._labels.get(t), x)

    def _objective_for(self, labels: np.ndarray, x: np.ndarray) -> float:
        scores = self.features @ x
        data_term = float(np.logaddexp(0.0, scores).sum() - scores @ labels) / self.n_samples
        return data_term + 0.5 * self.mu * float(x @ x)

    def _solve(self, labels: np.ndarray, start: np.ndarray) -> np.ndarray:
        x = start.copy()
        value = self._objective_for(labels, x)
        for _ in range(self._MAX_NEWTON_ITERS):
            grad = self._full_gradient_for(labels, x)
            grad_norm = float(np.linalg.norm(grad))
            if grad_norm <= self._GRAD_TOL:
                return x
            probs = _sigmoid(self.features @ x)
            weights = probs * (1.0 - probs)
            hessian = (self.features.T * weights) @ self.features / self.n_samples
            hessian[np.diag_indices_from(hessian)] += self.mu
            direction = np.linalg.solve(hessian, grad)
            slope = float(grad @ direction)
            step = 1.0
            while step > 1e-14:
                candidate = x - step * direction
                cand_value = self._objective_for(labels, candidate)
                if cand_value <= value - 1e-4 * step * slope:
                    break
                step *= 0.5
            else:
                raise SolverError("Newton line search stalled on the logistic reference")
            x, value = candidate, cand_value
        grad_norm = float(np.linalg.norm(self._full_gradient_for(labels, x)))
        if grad_norm > self._GRAD_TOL:
            raise SolverError(
                f"logistic reference solve stopped at gradient norm {grad_norm:.3e}"
            )
        return x

    def reference(self, t: int) -> ReferenceSolution:
        cached = self._references.get(t)
        if cached is None:
            labels = self._labels.get(t)
            point = self._solve(labels, self._last_solution)
            cached = ReferenceSolution(point, self._objective_for(labels, point))
            self._references[t] = cached
            self._last_solution = point
        return ReferenceSolution(cached.point.copy(), cached.value)

    def decision_argmin(self, t: int, y: np.ndarray) -> np.ndarray:
        return self.reference(t).point

    def gradient_drift_norm(self, i: int, t: int, x: np.ndarray) -> float:
        diff = self._labels.get(t) - self._labels.get(i)
        return float(np.linalg.norm(self.features.T @ diff)) / self.n_samples


class PerformativeMeanProblem(DriftingProblem):
    """Quadratic loss against samples whose mean reacts to the decision.

    Deploying ``x`` at step ``t`` makes samples Gaussian with mean
    ``base + t * drift_rate * direction + sensitivity * x`` and isotropic
    variance ``noise_scale**2``.  The loss is
    ``0.5 * E||u - sample||^2 + 0.5 * reg_strength * ||u||^2``, and the
    fixed point of deploy-then-minimize is available in closed form, which
    makes this family the ground truth for equilibrium tracking.
    """

    family = "performative"

    def __init__(
        self,
        base: np.ndarray,
        direction: np.ndarray,
        start_point: np.ndarray,
        sensitivity: float,
        drift_rate: float,
        noise_scale: float,
        reg_strength: float = 0.0,
        history_window: int | None = None,
    ):
        super().__init__(history_window)
        self.dim = base.shape[0]
        self.mu = 1.0
        self.smoothness = 1.0
        self.sensitivity = float(sensitivity)
        self.drift_rate = float(drift_rate)
        self.noise_scale = float(noise_scale)
        self.reg_strength = float(reg_strength)
        if not 0.0 <= self.sensitivity:
            raise ParameterError("sensitivity must be nonnegative")
        self.noise_bound = self.noise_scale * math.sqrt(self.dim)
        # Equilibria move by drift_rate / (1 + reg_strength - sensitivity)
        # per step; that contraction denominator must stay positive.
        denom = 1.0 + self.reg_strength - self.sensitivity
        if denom <= 0.0:
            raise ParameterError(
                "sensitivity must be below 1 + reg_strength for equilibria to exist"
            )
        self.drift_bound = self.drift_rate / denom
        self._eq_denominator = denom
        self.regularizer = (
            Regularizer.squared_l2(self.reg_strength)
            if self.reg_strength > 0.0
            else Regularizer.zero()
        )
        self._base = np.array(base, dtype=float)
        self._direction = np.array(direction, dtype=float)
        self._start = np.array(start_point, dtype=float)

    def initial_point(self) -> np.ndarray:
        return self._start.copy()

    def _check_time(self, t: int) -> None:
        if t < 0 or t > self._t:
            raise ParameterError(
                f"time {t} has not been reached yet (current step is {self._t})"
            )

    def mean_at(self, t: int, x: np.ndarray) -> np.ndarray:
        """Sample mean induced by deploying ``x`` at step ``t``."""
        self._check_time(t)
        x = _as_point(x, self.dim)
        return self._base + t * self.drift_rate * self._direction + self.sensitivity * x

    def advance(self, rng) -> None:
        # The drift is deterministic; no randomness is consumed so trial
        # streams line up with the decision-independent families.
        self._t += 1

    def oracle_gradient(self, t: int, x: np.ndarray, rng) -> np.ndarray:
        self._require_current(t)
        x = _as_point(x, self.dim)
        gen = rng.gen if isinstance(rng, RngStream) else rng
        sample = self.mean_at(t, x) + self.noise_scale * gen.standard_normal(self.dim)
        return x - sample

    def full_gradient(self, t: int, x: np.ndarray) -> np.ndarray:
        x = _as_point(x, self.dim)
        return x - self.mean_at(t, x)

    def equilibrium_point(self, t: int) -> np.ndarray:
        self._check_time(t)
        return (self._base + t * self.drift_rate * self._direction) / self._eq_denominator

    def objective(self, t: int, x: np.ndarray) -> float:
        """Equilibrium objective: loss under the distribution the target deploys."""
        x = _as_point(x, self.dim)
        anchor = self.mean_at(t, self.equilibrium_point(t))
        diff = x - anchor
        variance_term = 0.5 * self.dim * self.noise_scale**2
        return 0.5 * float(diff @ diff) + variance_term + self.regularizer.value(x)

    def reference(self, t: int) -> ReferenceSolution:
        point = self.equilibrium_point(t)
        return ReferenceSolution(point, self.objective(t, point))

    def decision_argmin(self, t: int, y: np.ndarray) -> np.ndarray:
        y = _as_point(y, self.dim)
        return self.mean_at(t, y) / (1.0 + self.reg_strength)

    def gradient_drift_norm(self, i: int, t: int, x: np.ndarray) -> float:
        self._check_time(max(i, t))
        if min(i, t) < 0:
            raise ParameterError("time indices must be nonnegative")
        return self.drift_rate * abs(t - i)


def _init_stream(seed: int) -> RngStream:
    return RngStream(seed, INIT_STREAM_ID)


def make_least_squares(
    dim: int = 50,
    n_samples: int = 100,
    mu: float = 1.0,
    smoothness: float = 1.0,
    noise_bound: float = 10.0,
    drift_bound: float = 1.0,
    seed: int = 0,
    history_window: int | None = None,
) -> LeastSquaresProblem:
    """Build the drifting least-squares family.

    Static data comes from the init stream in a fixed order: design matrix,
    then initial minimizer, then start point (both standard Gaussian).
    """
    if dim < 1 or n_samples < dim:
        raise ParameterError("need n_samples >= dim >= 1 for the designed spectrum")
    if not 0.0 < mu <= smoothness:
        raise ParameterError("need 0 < mu <= smoothness")
    if noise_bound < 0.0 or drift_bound < 0.0:
        raise ParameterError("noise and drift bounds must be nonnegative")
    rng = _init_stream(seed)
    design = matrix_with_spectrum(n_samples, dim, math.sqrt(mu), math.sqrt(smoothness), rng)
    minimizer0 = rng.gen.standard_normal(dim)
    start = rng.gen.standard_normal(dim)
    return LeastSquaresProblem(
        design, start, minimizer0, mu, smoothness, noise_bound, drift_bound, history_window
    )


def make_sparse_least_squares(
    dim: int = 50,
    n_samples: int = 100,
    mu: float = 1.0,
    smoothness: float = 1.0,
    noise_bound: float = 0.5,
    drift_bound: float = 0.05,
    seed: int = 0,
    history_window: int | None = None,
) -> SparseLeastSquaresProblem:
    """Build the l1-ball-constrained family with a sparse moving target.

    The target starts on ``floor(log dim)`` coordinates (uniform in the l1
    ball of that subspace, padded with zeros); the start point is uniform in
    the full-dimensional unit l1 ball.  Draw order: design, target, start.
    """
    if dim < 3 or n_samples < dim:
        raise ParameterError("need n_samples >= dim >= 3 so the support is nonempty")
    if not 0.0 < mu <= smoothness:
        raise ParameterError("need 0 < mu <= smoothness")
    if noise_bound < 0.0:
        raise ParameterError("noise bound must be nonnegative")
    if not 0.0 < drift_bound < math.sqrt(2.0):
        raise ParameterError("drift bound must lie in (0, sqrt(2)) for the support walk")
    rng = _init_stream(seed)
    design = matrix_with_spectrum(n_samples, dim, math.sqrt(mu), math.sqrt(smoothness), rng)
    support_size = int(math.floor(math.log(dim)))
    minimizer0 = np.zeros(dim)
    minimizer0[:support_size] = sample_l1_ball(support_size, rng)
    start = sample_l1_ball(dim, rng)
    return SparseLeastSquaresProblem(
        design, start, minimizer0, mu, smoothness, noise_bound, drift_bound, history_window
    )


def make_logistic(
    dim: int = 20,
    n_samples: int = 200,
    mu: float = 1.0,
    seed: int = 0,
    history_window: int | None = None,
) -> LogisticRegressionProblem:
    """Build the label-flip logistic family.

    Draw order: feature matrix (standard Gaussian rows), start point, then
    initial labels (fair coin per sample).  Smoothness, noise, and drift
    constants are computed from the data rather than pinned outside.
    """
    if dim < 1 or n_samples < 1:
        raise ParameterError("need positive feature dimensions")
    if mu <= 0.0:
        raise ParameterError("the regularizer weight mu must be positive")
    rng = _init_stream(seed)
    features = rng.gen.standard_normal((n_samples, dim))
    start = rng.gen.standard_normal(dim)
    labels0 = rng.gen.integers(0, 2, size=n_samples).astype(float)
    return LogisticRegressionProblem(features, start, labels0, mu, history_window)


def make_performative(
    dim: int = 10,
    sensitivity: float = 0.5,
    drift_rate: float = 0.05,
    noise_scale: float = 0.5,
    reg_strength: float = 0.0,
    seed: int = 0,
    history_window: int | None = None,
) -> PerformativeMeanProblem:
    """Build the decision-responsive quadratic family.

    Draw order: base mean (standard Gaussian), unit drift direction, start
    point.  The per-step drift itself is deterministic.
    """
    if dim < 1:
        raise ParameterError("need a positive dimension")
    if sensitivity < 0.0:
        raise ParameterError("sensitivity must be nonnegative")
    if drift_rate < 0.0 or noise_scale < 0.0:
        raise ParameterError("drift rate and noise scale must be nonnegative")
    if reg_strength < 0.0:
        raise ParameterError("reg_strength must be nonnegative")
    rng = _init_stream(seed)
    base = rng.gen.standard_normal(dim)
    direction = sample_sphere(dim, 1.0, rng)
    start = rng.gen.standard_normal(dim)
    return PerformativeMeanProblem(
        base,
        direction,
        start,
        sensitivity,
        drift_rate,
        noise_scale,
        reg_strength,
        history_window,
    )


def compute_equilibrium(
    problem: DriftingProblem,
    t: int,
    tol: float = 1e-10,
    max_iters: int = 10_000,
) -> ReferenceSolution:
    """Find the deploy-then-minimize fixed point by repeated best response.

    The iteration contracts at rate ``sensitivity / mu``; it stops once a
    step is below ``tol * (1 - rate)`` so the remaining distance to the fixed
    point is at most ``tol``.  If the observed per-step contraction exceeds
    the guaranteed rate by more than 0.05 five times in a row, the map is
    treated as non-contractive and a solver error is raised.
    """
    if tol <= 0.0:
        raise ParameterError("tolerance must be positive")
    rate = problem.sensitivity / problem.mu
    if rate >= 1.0:
        raise ParameterError("best-response iteration requires sensitivity < mu")
    y = problem.initial_point()
    prev_step = None
    violations = 0
    for _ in range(max_iters):
        y_next = problem.decision_argmin(t, y)
        step = float(np.linalg.norm(y_next - y))
        if step <= tol * (1.0 - rate):
            return ReferenceSolution(y_next, problem.objective(t, y_next))
        if prev_step is not None and prev_step > 0.0:
            if step / prev_step > rate + 0.05:
                violations += 1
                if violations >= 5:
                    raise SolverError(
                        "best-response iteration stopped contracting "
                        f"(last ratio {step / prev_step:.4f} vs rate {rate:.4f})"
                    )
            else:
                violations = 0
        prev_step = step
        y = y_next
    raise SolverError(f"best-response iteration did not converge in {max_iters} steps")


def optimality_residual(problem: DriftingProblem, t: int, point: np.ndarray) -> float:
    """Norm of the projected-gradient fixed-point residual at ``point``.

    Zero exactly at the step-``t`` target; for decision-dependent families
    the gradient is taken with the deployed decision equal to ``point``,
    so the residual vanishes at the equilibrium.
    """
    step = 1.0 / problem.smoothness
    moved = prox(problem.regularizer, step, point - step * problem.full_gradient(t, point))
    return float(np.linalg.norm(moved - point))
