"""Tracking drifting optima with proximal stochastic gradient methods."""

from .algorithms import KINDS, Trajectory, averaged_path, averaging_weight, run
from .bounds import (
    BoundCurve,
    BoundParams,
    FAMILIES,
    bound_curve,
    dist_expectation,
    dist_highprob,
    gap_expectation,
    gap_highprob,
    gap_highprob_simple,
    gap_noise_energy,
)
from .errors import (
    CalibrationError,
    DivergenceError,
    DriftTrackError,
    HistoryError,
    OutOfSyncError,
    ParameterError,
    RegimeError,
    SolverError,
)
from .harness import (
    AggregateSeries,
    CalibrationResult,
    ExperimentConfig,
    MAX_WORKERS_ENV,
    build_problem,
    calibrate_c,
    resolve_schedule,
    run_experiment,
    run_sweep,
    write_outputs,
)
from .mathkit import RngStream, haar_orthogonal, matrix_with_spectrum, sample_l1_ball, sample_sphere
from .problems import (
    INIT_STREAM_ID,
    DriftingProblem,
    LeastSquaresProblem,
    LogisticRegressionProblem,
    PerformativeMeanProblem,
    ReferenceSolution,
    SparseLeastSquaresProblem,
    compute_equilibrium,
    logistic_noise_second_moment,
    make_least_squares,
    make_logistic,
    make_performative,
    make_sparse_least_squares,
    optimality_residual,
)
from .prox import Regularizer, project_l1_ball, prox, soft_threshold
from .schedules import (
    RegimeReport,
    SCHEDULE_KINDS,
    Schedule,
    classify_regime,
    critical_step,
    decay_dist_expectation,
    decay_dist_highprob,
    decay_gap_expectation,
    decay_gap_highprob,
    steady_state_dist,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateSeries",
    "BoundCurve",
    "BoundParams",
    "CalibrationError",
    "CalibrationResult",
    "DivergenceError",
    "DriftTrackError",
    "DriftingProblem",
    "ExperimentConfig",
    "FAMILIES",
    "HistoryError",
    "INIT_STREAM_ID",
    "KINDS",
    "LeastSquaresProblem",
    "LogisticRegressionProblem",
    "MAX_WORKERS_ENV",
    "OutOfSyncError",
    "ParameterError",
    "PerformativeMeanProblem",
    "ReferenceSolution",
    "RegimeError",
    "RegimeReport",
    "Regularizer",
    "RngStream",
    "SCHEDULE_KINDS",
    "Schedule",
    "SolverError",
    "SparseLeastSquaresProblem",
    "Trajectory",
    "averaged_path",
    "averaging_weight",
    "bound_curve",
    "build_problem",
    "calibrate_c",
    "classify_regime",
    "compute_equilibrium",
    "critical_step",
    "decay_dist_expectation",
    "decay_dist_highprob",
    "decay_gap_expectation",
    "decay_gap_highprob",
    "dist_expectation",
    "dist_highprob",
    "gap_expectation",
    "gap_highprob",
    "gap_highprob_simple",
    "gap_noise_energy",
    "haar_orthogonal",
    "logistic_noise_second_moment",
    "make_least_squares",
    "make_logistic",
    "make_performative",
    "make_sparse_least_squares",
    "matrix_with_spectrum",
    "optimality_residual",
    "project_l1_ball",
    "prox",
    "resolve_schedule",
    "run",
    "run_experiment",
    "run_sweep",
    "sample_l1_ball",
    "sample_sphere",
    "soft_threshold",
    "steady_state_dist",
    "write_outputs",
]
