"""Delayed Mittag-Leffler matrix functions with logarithm and solvers for
Hadamard-type fractional time-delay linear and semilinear systems."""

__version__ = "0.1.0"

from .delayed_ml import (
    DelayedMLSpec,
    delay_index,
    delayed_ml,
    norm_bound,
    pure_delay_ml,
    scalar_delay_series,
    y_k_commuting,
    y_k_general,
)
from .linear import (
    check_initial_condition,
    evaluate_solution,
    make_grid,
    solve_forced_zero_ic,
    solve_full,
    solve_homogeneous,
)
from .logquad import QuadraturePolicy, log_beta_integral, log_integrate
from .nonlinear import (
    StabilityReport,
    contraction_constants,
    evaluate_fixed_point,
    picard_solve,
    theta_apply,
    verify_ulam_hyers,
    weighted_norm,
)
from .oracle import (
    LogSubstitutedProblem,
    direct_solve,
    hadamard_differintegral,
    to_log_coordinates,
    to_problem_coordinates,
)
from .problemdoc import build_problem, load_document, normalize_document
from .problems import HistorySpec, LinearDelayProblem, SemilinearProblem, Trajectory
from .rhs import RhsExpression, parse_rhs
from .special import (
    SeriesPolicy,
    beta,
    e_ml_matrix,
    gamma,
    gammaln,
    ml_matrix,
    ml_scalar,
    rgamma,
)

__all__ = [
    "DelayedMLSpec",
    "HistorySpec",
    "LinearDelayProblem",
    "LogSubstitutedProblem",
    "QuadraturePolicy",
    "RhsExpression",
    "SemilinearProblem",
    "SeriesPolicy",
    "StabilityReport",
    "Trajectory",
    "beta",
    "build_problem",
    "check_initial_condition",
    "contraction_constants",
    "delay_index",
    "delayed_ml",
    "direct_solve",
    "e_ml_matrix",
    "evaluate_fixed_point",
    "evaluate_solution",
    "gamma",
    "gammaln",
    "hadamard_differintegral",
    "load_document",
    "log_beta_integral",
    "log_integrate",
    "make_grid",
    "ml_matrix",
    "ml_scalar",
    "norm_bound",
    "normalize_document",
    "parse_rhs",
    "picard_solve",
    "pure_delay_ml",
    "rgamma",
    "scalar_delay_series",
    "solve_forced_zero_ic",
    "solve_full",
    "solve_homogeneous",
    "theta_apply",
    "to_log_coordinates",
    "to_problem_coordinates",
    "verify_ulam_hyers",
    "weighted_norm",
    "y_k_commuting",
    "y_k_general",
]
