"""Transfer-learning estimation of sparse precision matrices.

A target study's precision matrix is estimated jointly with related source
studies: a multi-task graphical-lasso initialization shares structure across
studies, a differential-network refinement corrects the per-source biases,
and a cross-validated ranking detects which sources are informative.
"""

from .baselines import GlassoEstimate, glasso, glasso_pooled, glasso_target, pooled_covariance
from .criteria import bic_dtrace, bic_trans, cv_error
from .data import (
    CovMatrix,
    ProblemInstance,
    StudyData,
    build_problem,
    load_csv,
    sample_covariance,
)
from .dtrace import (
    DiffNetwork,
    DtraceConfig,
    default_step,
    dtrace_gradient,
    dtrace_objective,
    solve_dtrace,
)
from .errors import (
    ConfigError,
    ContractError,
    DimensionError,
    NumericError,
    ParseError,
    SelectionError,
    TransGlassoError,
)
from .mtglasso import (
    AdmmConfig,
    MtGlassoSolution,
    omega_k_update,
    residuals,
    shared_split_prox,
    soft_threshold,
    solve_mtglasso,
)
from .pipeline import (
    TransGlassoEstimate,
    combine,
    cv_folds,
    fit_trans_glasso,
    rank_sources,
    select_lambda_m,
    select_lambda_psi,
    trans_glasso_cv,
)
from .simulate import (
    ExperimentConfig,
    ExperimentReport,
    GroundTruth,
    frob_error,
    gen_model,
    run_experiment,
    sample_gaussian,
    subseed,
)
from .tuning import TuningGrid, default_glasso_grid, default_m_grid, default_psi_grid

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig",
    "ConfigError",
    "ContractError",
    "CovMatrix",
    "DiffNetwork",
    "DimensionError",
    "DtraceConfig",
    "ExperimentConfig",
    "ExperimentReport",
    "GlassoEstimate",
    "GroundTruth",
    "MtGlassoSolution",
    "NumericError",
    "ParseError",
    "ProblemInstance",
    "SelectionError",
    "StudyData",
    "TransGlassoError",
    "TransGlassoEstimate",
    "TuningGrid",
    "bic_dtrace",
    "bic_trans",
    "build_problem",
    "combine",
    "cv_error",
    "cv_folds",
    "default_glasso_grid",
    "default_m_grid",
    "default_psi_grid",
    "default_step",
    "dtrace_gradient",
    "dtrace_objective",
    "fit_trans_glasso",
    "frob_error",
    "gen_model",
    "glasso",
    "glasso_pooled",
    "glasso_target",
    "load_csv",
    "omega_k_update",
    "pooled_covariance",
    "rank_sources",
    "residuals",
    "run_experiment",
    "sample_covariance",
    "sample_gaussian",
    "select_lambda_m",
    "select_lambda_psi",
    "shared_split_prox",
    "soft_threshold",
    "solve_dtrace",
    "solve_mtglasso",
    "subseed",
    "trans_glasso_cv",
]
