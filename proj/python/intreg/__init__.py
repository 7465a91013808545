"""Sparse group-lasso + lasso multivariate regression for integrative analysis."""

from ._core import (
    CvResult,
    DivergedError,
    FitReport,
    HyperParams,
    ModelFit,
    UndefinedMetricError,
    UnsupportedScenarioError,
    ValidationError,
    cross_validate,
    fit,
    fpr_fnr,
    group_soft_threshold,
    kkt_residual,
    objective,
    run_study,
    simulate_data,
    soft_threshold,
)

__all__ = [
    "CvResult",
    "DivergedError",
    "FitReport",
    "HyperParams",
    "ModelFit",
    "UndefinedMetricError",
    "UnsupportedScenarioError",
    "ValidationError",
    "cross_validate",
    "fit",
    "fpr_fnr",
    "group_soft_threshold",
    "kkt_residual",
    "objective",
    "run_study",
    "simulate_data",
    "soft_threshold",
]
