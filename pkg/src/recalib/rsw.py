"""Regression-calibration estimators with delta-method uncertainty.

The corrected effect estimate is the ratio of two fitted slopes: the surrogate
coefficient of the outcome model (fit on the main study) over the surrogate
coefficient of the calibration model (fit on the validation study). The four
adjustment strategies differ only in which of the two models includes the
covariate set. Because the two studies are disjoint, the two slope estimates
are independent and the delta-method variance carries no covariance term.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .data import MainSample, ValidationSample
from .exceptions import (
    EmptyBin,
    InvalidConfig,
    NearZeroCalibrationSlope,
    ZeroDenominator,
    ZeroSlope,
)
from .regress import Family, ModelFit, fit_logistic, fit_ols
from .strategies import AdjustmentStrategy

Z_CRIT = 1.96
SMALL_ME_THRESHOLD = 0.5
RARE_DISEASE_PREVALENCE = 0.05
SLOPE_T_MIN = 2.0
DEFAULT_Z_BINS = 5
DEFAULT_V_BINS = 3


@dataclass(frozen=True)
class RswEstimate:
    beta_hat: float
    se: float
    ci_low: float
    ci_high: float
    strategy: AdjustmentStrategy
    gamma_hat: float
    gamma_se: float
    alpha_hat: float
    alpha_se: float
    small_me_stat: float
    outcome_family: Family


@dataclass(frozen=True)
class EffectModEstimate:
    """Interaction-aware corrected estimate: covariate-specific slope beta(V)."""

    beta_z_star: float
    beta_v_star: float
    beta_zv_star: float
    beta_v2_star: float
    alpha_z: float
    evaluator: Callable[[float], float]


def _design(z: np.ndarray, covariate_arrays: Iterable[np.ndarray]) -> np.ndarray:
    cols = [np.ones_like(z), z, *covariate_arrays]
    return np.column_stack(cols)


def _covariate_arrays(sample, names: Iterable[str]) -> list[np.ndarray]:
    arrays = []
    for name in names:
        if name not in sample.covariates:
            raise InvalidConfig(f"covariate {name!r} not present in the sample")
        arrays.append(sample.covariates[name])
    return arrays


def fit_outcome_model(
    main: MainSample, covariates: Iterable[str], outcome_family: Family
) -> ModelFit:
    X = _design(main.z, _covariate_arrays(main, covariates))
    if outcome_family is Family.LOGISTIC:
        return fit_logistic(main.y, X)
    return fit_ols(main.y, X)


def fit_calibration_model(valid: ValidationSample, covariates: Iterable[str]) -> ModelFit:
    X = _design(valid.z, _covariate_arrays(valid, covariates))
    return fit_ols(valid.x, X)


def delta_variance(
    gamma_hat: float, var_gamma: float, alpha_hat: float, var_alpha: float
) -> float:
    """Variance of gamma_hat/alpha_hat for independent numerator and denominator."""
    if alpha_hat == 0.0:
        raise ZeroSlope("calibration slope is zero")
    if var_gamma < 0.0 or var_alpha < 0.0:
        raise InvalidConfig("variances must be nonnegative")
    return var_gamma / alpha_hat**2 + gamma_hat**2 * var_alpha / alpha_hat**4


def check_calibration_slope(alpha_hat: float, alpha_se: float) -> None:
    if abs(alpha_hat) < 1e-8 or (alpha_se > 0 and abs(alpha_hat) / alpha_se < SLOPE_T_MIN):
        raise NearZeroCalibrationSlope(
            f"calibration slope {alpha_hat:.3g} (se {alpha_se:.3g}) is too close to zero"
        )


def infer_strategy(covariates_outcome: tuple, covariates_mem: tuple) -> AdjustmentStrategy:
    if covariates_outcome and covariates_mem:
        return AdjustmentStrategy.OM
    if covariates_outcome:
        return AdjustmentStrategy.O_NONE
    if covariates_mem:
        return AdjustmentStrategy.NONE_M
    return AdjustmentStrategy.NONE_NONE


def _check_strategy_sets(strategy, covariates_outcome, covariates_mem):
    want_outcome = strategy in (AdjustmentStrategy.OM, AdjustmentStrategy.O_NONE)
    want_mem = strategy in (AdjustmentStrategy.OM, AdjustmentStrategy.NONE_M)
    if bool(covariates_outcome) != want_outcome or bool(covariates_mem) != want_mem:
        raise InvalidConfig(
            f"strategy {strategy.value} is inconsistent with covariate sets "
            f"outcome={list(covariates_outcome)} mem={list(covariates_mem)}"
        )


def assemble_estimate(
    fit_outcome: ModelFit,
    fit_mem: ModelFit,
    strategy: AdjustmentStrategy,
) -> RswEstimate:
    """Combine already-fitted component models into a corrected estimate."""
    gamma_hat = float(fit_outcome.coefficients[1])
    gamma_var = float(fit_outcome.cov[1, 1])
    alpha_hat = float(fit_mem.coefficients[1])
    alpha_var = float(fit_mem.cov[1, 1])
    alpha_se = float(np.sqrt(alpha_var))
    check_calibration_slope(alpha_hat, alpha_se)
    beta = gamma_hat / alpha_hat
    var = delta_variance(gamma_hat, gamma_var, alpha_hat, alpha_var)
    se = float(np.sqrt(var))
    return RswEstimate(
        beta_hat=beta,
        se=se,
        ci_low=beta - Z_CRIT * se,
        ci_high=beta + Z_CRIT * se,
        strategy=strategy,
        gamma_hat=gamma_hat,
        gamma_se=float(np.sqrt(gamma_var)),
        alpha_hat=alpha_hat,
        alpha_se=alpha_se,
        small_me_stat=float(fit_mem.residual_variance) * beta**2,
        outcome_family=fit_outcome.family,
    )


def estimate(
    main: MainSample,
    valid: ValidationSample,
    strategy: AdjustmentStrategy | None = None,
    covariates_outcome: Iterable[str] = (),
    covariates_mem: Iterable[str] = (),
    outcome_family: Family = Family.LINEAR,
) -> RswEstimate:
    """Corrected effect of the true exposure on the outcome.

    ``strategy`` may be omitted, in which case it is inferred from which
    covariate sets are nonempty; when given, the sets must be consistent with
    it (OM needs both nonempty, NoneNone both empty, and so on).
    """
    covariates_outcome = tuple(covariates_outcome)
    covariates_mem = tuple(covariates_mem)
    if strategy is None:
        strategy = infer_strategy(covariates_outcome, covariates_mem)
    else:
        _check_strategy_sets(strategy, covariates_outcome, covariates_mem)
    fit_o = fit_outcome_model(main, covariates_outcome, outcome_family)
    fit_m = fit_calibration_model(valid, covariates_mem)
    return assemble_estimate(fit_o, fit_m, strategy)


def small_me_diagnostic(
    fit_mem: ModelFit, beta_hat: float, outcome_prevalence: float | None = None
) -> dict:
    """Small-measurement-error check: var(X|Z,V) * beta^2 should be small.

    The logistic approximation is also acceptable under a rare outcome, so the
    warning only fires when the statistic is large *and* the outcome is common
    (or the prevalence is unknown).
    """
    if fit_mem.residual_variance is None:
        raise InvalidConfig("diagnostic needs a linear calibration model")
    stat = float(fit_mem.residual_variance) * beta_hat**2
    rare_ok = outcome_prevalence is not None and outcome_prevalence < RARE_DISEASE_PREVALENCE
    return {
        "stat": stat,
        "rare_disease_ok": rare_ok,
        "warn": stat >= SMALL_ME_THRESHOLD and not rare_ok,
    }


def estimate_effect_mod_parametric(
    main: MainSample, valid: ValidationSample, covariate: str
) -> EffectModEstimate:
    """Covariate-specific corrected slope under an exposure-covariate interaction.

    The outcome model needs both the Z*V product and the V^2 term: substituting
    the linear calibration model E[X|Z,V] into an outcome model with an X*V
    interaction produces exactly those regressors, and the corrected
    covariate-specific slope is (beta_z* + beta_zv* V) / alpha_z.
    """
    if covariate not in main.covariates or covariate not in valid.covariates:
        raise InvalidConfig(f"covariate {covariate!r} must be present in both samples")
    v = main.covariates[covariate]
    X = np.column_stack([np.ones_like(main.z), main.z, v, main.z * v, v**2])
    fit_o = fit_ols(main.y, X)
    fit_m = fit_calibration_model(valid, (covariate,))
    alpha_z = float(fit_m.coefficients[1])
    check_calibration_slope(alpha_z, fit_m.se(1))
    b_z, b_v, b_zv, b_v2 = (float(c) for c in fit_o.coefficients[1:5])

    def evaluator(value: float) -> float:
        return (b_z + b_zv * value) / alpha_z

    return EffectModEstimate(
        beta_z_star=b_z,
        beta_v_star=b_v,
        beta_zv_star=b_zv,
        beta_v2_star=b_v2,
        alpha_z=alpha_z,
        evaluator=evaluator,
    )


def _quantile_edges(values: np.ndarray, bins: int) -> np.ndarray:
    edges = np.quantile(values, np.linspace(0.0, 1.0, bins + 1))
    edges[0], edges[-1] = -np.inf, np.inf
    return edges


def _bin_index(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    return np.clip(np.searchsorted(edges, values, side="right") - 1, 0, len(edges) - 2)


def _bin_mean(values: np.ndarray, mask: np.ndarray, label: str, min_count: int) -> float:
    if mask.sum() < min_count:
        raise EmptyBin(f"{label}: only {int(mask.sum())} observations (need {min_count})")
    return float(values[mask].mean())


def estimate_nonparametric(
    main: MainSample,
    valid: ValidationSample,
    strategy: AdjustmentStrategy,
    covariate: str,
    z_lo: int,
    z_hi: int,
    v_bin: int,
    z_bins: int = DEFAULT_Z_BINS,
    v_bins: int = DEFAULT_V_BINS,
    min_count: int = 30,
) -> float:
    """Binned (model-free) corrected contrast between two surrogate strata.

    Equal-frequency bin edges are computed on the main study and applied to
    both samples. ``z_lo``/``z_hi`` index the surrogate bins being contrasted;
    ``v_bin`` selects the covariate stratum for whichever model the strategy
    conditions on V.
    """
    if z_lo == z_hi:
        raise InvalidConfig("the two surrogate bins must differ")
    if covariate not in main.covariates or covariate not in valid.covariates:
        raise InvalidConfig(f"covariate {covariate!r} must be present in both samples")
    z_edges = _quantile_edges(main.z, z_bins)
    v_edges = _quantile_edges(main.covariates[covariate], v_bins)

    zi_main = _bin_index(main.z, z_edges)
    vi_main = _bin_index(main.covariates[covariate], v_edges)
    zi_val = _bin_index(valid.z, z_edges)
    vi_val = _bin_index(valid.covariates[covariate], v_edges)

    num_conditions_on_v = strategy in (AdjustmentStrategy.OM, AdjustmentStrategy.O_NONE)
    den_conditions_on_v = strategy in (AdjustmentStrategy.OM, AdjustmentStrategy.NONE_M)

    def main_mask(z_bin: int) -> np.ndarray:
        mask = zi_main == z_bin
        if num_conditions_on_v:
            mask &= vi_main == v_bin
        return mask

    def val_mask(z_bin: int) -> np.ndarray:
        mask = zi_val == z_bin
        if den_conditions_on_v:
            mask &= vi_val == v_bin
        return mask

    numerator = _bin_mean(main.y, main_mask(z_hi), f"main z-bin {z_hi}", min_count) - _bin_mean(
        main.y, main_mask(z_lo), f"main z-bin {z_lo}", min_count
    )
    denominator = _bin_mean(valid.x, val_mask(z_hi), f"validation z-bin {z_hi}", min_count) - _bin_mean(
        valid.x, val_mask(z_lo), f"validation z-bin {z_lo}", min_count
    )
    if abs(denominator) < 1e-12:
        raise ZeroDenominator("binned exposure contrast is zero")
    return numerator / denominator
