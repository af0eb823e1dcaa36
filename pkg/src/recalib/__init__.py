"""recalib: regression-calibration correction for mismeasured exposures.

Main-study/validation-study designs where a continuous exposure X is observed
only through an error-prone surrogate Z. Provides the four covariate-adjusted
ratio estimators with delta-method uncertainty, a closed-form asymptotic
efficiency engine, a DAG-driven simulation harness, and a covariate-selection
advisor, all surfaced through the ``recalib`` CLI.
"""
from .advisor import Advice, CovariateRole, advise, classify, quantify, role_from_label
from .analytic import (
    AnalyticLimits,
    PopulationParams,
    analytic_variance,
    are,
    are_grid,
    partial_correlation,
    population_coefficients,
)
from .data import Dataset, MainSample, ValidationSample
from .harness import SimResult, run_catalog, run_scenario, summary_table
from .regress import DesignSpec, Family, ModelFit, fit_logistic, fit_ols
from .rsw import (
    EffectModEstimate,
    RswEstimate,
    delta_variance,
    estimate,
    estimate_effect_mod_parametric,
    estimate_nonparametric,
    small_me_diagnostic,
)
from .scenario import DagId, GeneratedSample, ScenarioConfig, catalog, generate, implied_correlations
from .strategies import AdjustmentStrategy

__version__ = "0.1.0"

__all__ = [
    "Advice",
    "AdjustmentStrategy",
    "AnalyticLimits",
    "CovariateRole",
    "DagId",
    "Dataset",
    "DesignSpec",
    "EffectModEstimate",
    "Family",
    "GeneratedSample",
    "MainSample",
    "ModelFit",
    "PopulationParams",
    "RswEstimate",
    "ScenarioConfig",
    "SimResult",
    "ValidationSample",
    "advise",
    "analytic_variance",
    "are",
    "are_grid",
    "catalog",
    "classify",
    "delta_variance",
    "estimate",
    "estimate_effect_mod_parametric",
    "estimate_nonparametric",
    "fit_logistic",
    "fit_ols",
    "generate",
    "implied_correlations",
    "partial_correlation",
    "population_coefficients",
    "quantify",
    "role_from_label",
    "run_catalog",
    "run_scenario",
    "small_me_diagnostic",
    "summary_table",
]
