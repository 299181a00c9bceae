"""Byzantine-robust, communication-efficient distributed GLM learning.

A simulator for master/worker gradient-aggregation learning with
coordinate-wise robust aggregation (median / trimmed mean), a
surrogate-likelihood master update with an optional proximal term,
attack models for corrupted workers, error-bound diagnostics, and an
experiment harness that reproduces the reference convergence behavior.
"""
from .aggregation import AggRule, aggregate, coord_mean, coord_median, coord_trimmed_mean
from .attacks import AttackSpec, corrupt, sanitize_report
from .core import ByzantineMask, Dataset, GradientReport, ShardAssignment, l2_norm
from .data import (
    CsvSchema,
    SyntheticSpec,
    gen_linear,
    gen_logistic_dense,
    gen_logistic_sparse,
    generate,
    load_csv,
    split_and_shard,
)
from .estimators import ByzantineRobustClassifier, ByzantineRobustRegressor
from .experiments import RunConfig, compare_suite, execute, load_config, parse_config
from .glm import GlmModel, Penalty, gradient, loss_value, penalty_value, prox_penalty
from .protocol import AlgoSpec, IterationTrace, one_round, run
from .solver import (
    SolveDiagnostics,
    SolverOptions,
    SurrogateProblem,
    centralized_minimizer,
    closed_form_ridge_update,
    solve_surrogate,
)
from .theory import TheoryParams, c_epsilon, delta_nm_alpha, delta_nm_beta, suggest_lambda

__version__ = "0.1.0"

__all__ = [
    "AggRule",
    "AlgoSpec",
    "AttackSpec",
    "ByzantineMask",
    "ByzantineRobustClassifier",
    "ByzantineRobustRegressor",
    "CsvSchema",
    "Dataset",
    "GlmModel",
    "GradientReport",
    "IterationTrace",
    "Penalty",
    "RunConfig",
    "ShardAssignment",
    "SolveDiagnostics",
    "SolverOptions",
    "SurrogateProblem",
    "SyntheticSpec",
    "TheoryParams",
    "aggregate",
    "c_epsilon",
    "centralized_minimizer",
    "closed_form_ridge_update",
    "compare_suite",
    "coord_mean",
    "coord_median",
    "coord_trimmed_mean",
    "corrupt",
    "delta_nm_alpha",
    "delta_nm_beta",
    "execute",
    "gen_linear",
    "gen_logistic_dense",
    "gen_logistic_sparse",
    "generate",
    "gradient",
    "l2_norm",
    "load_config",
    "load_csv",
    "loss_value",
    "one_round",
    "parse_config",
    "penalty_value",
    "prox_penalty",
    "run",
    "sanitize_report",
    "solve_surrogate",
    "split_and_shard",
    "suggest_lambda",
]
