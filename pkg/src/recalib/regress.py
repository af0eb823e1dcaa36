"""Dependency-light regression core: OLS and IRLS logistic fits.

Both fitters return a :class:`ModelFit` carrying the coefficient vector and its
estimated covariance matrix, which is all the downstream calibration machinery
needs. OLS goes through a Householder QR factorization rather than the normal
equations; the logistic fit is plain Fisher scoring (IRLS) with the canonical
link, where observed and expected information coincide.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import expit

from .exceptions import DimensionMismatch, NonConvergence, RankDeficient, Separation

RANK_TOL = 1e-10
IRLS_TOL = 1e-9
IRLS_MAX_ITER = 100
DIVERGENCE_BOUND = 30.0


class ResponseRole(Enum):
    OUTCOME = "Outcome"
    TRUE_EXPOSURE = "TrueExposure"
    COVARIATE = "Covariate"


class Family(Enum):
    LINEAR = "Linear"
    LOGISTIC = "Logistic"


@dataclass(frozen=True)
class DesignSpec:
    """Names the regressors of one of the component models.

    ``regressors`` excludes the intercept, which is always included.
    """

    response_role: ResponseRole
    regressors: tuple[str, ...]
    include_intercept: bool = True

    def __post_init__(self):
        if len(set(self.regressors)) != len(self.regressors):
            raise ValueError("duplicate regressor names")
        if not self.regressors:
            raise ValueError("need at least one regressor besides the intercept")
        if not self.include_intercept:
            raise ValueError("all models in this package include an intercept")


@dataclass(frozen=True)
class ModelFit:
    """Coefficients and coefficient covariance from one regression fit."""

    coefficients: np.ndarray
    cov: np.ndarray
    residual_variance: float | None
    n_obs: int
    converged: bool
    family: Family

    def __post_init__(self):
        if self.coefficients.shape[0] != self.cov.shape[0]:
            raise DimensionMismatch("coefficient/covariance dimension mismatch")

    def se(self, index: int) -> float:
        return float(np.sqrt(self.cov[index, index]))


def _check_design(y: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or y.ndim != 1:
        raise DimensionMismatch("expected 1-d response and 2-d design")
    n, p = X.shape
    if n != y.shape[0]:
        raise DimensionMismatch(f"{n} design rows vs {y.shape[0]} responses")
    if n <= p:
        raise DimensionMismatch("need more observations than parameters")
    return y, X


def _qr_solve(y: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares solve via QR; returns (coefficients, R)."""
    Q, R = np.linalg.qr(X)
    pivots = np.abs(np.diag(R))
    if pivots.min() < RANK_TOL * pivots.max():
        raise RankDeficient("design matrix is numerically rank deficient")
    beta = solve_triangular(R, Q.T @ y, lower=False)
    return beta, R


def fit_ols(y: np.ndarray, X: np.ndarray) -> ModelFit:
    """Ordinary least squares with cov = s² (XᵀX)⁻¹, computed from QR."""
    y, X = _check_design(y, X)
    n, p = X.shape
    beta, R = _qr_solve(y, X)
    resid = y - X @ beta
    rss = float(resid @ resid)
    s2 = rss / (n - p)
    Rinv = solve_triangular(R, np.eye(p), lower=False)
    cov = s2 * (Rinv @ Rinv.T)
    return ModelFit(
        coefficients=beta,
        cov=cov,
        residual_variance=s2,
        n_obs=n,
        converged=True,
        family=Family.LINEAR,
    )


def fit_logistic(y: np.ndarray, X: np.ndarray) -> ModelFit:
    """Logistic regression by IRLS, starting from zero coefficients."""
    y, X = _check_design(y, X)
    n, p = X.shape
    vals = np.unique(y)
    if not np.isin(vals, (0.0, 1.0)).all():
        raise DimensionMismatch("logistic response must be coded 0/1")
    if vals.size < 2:
        raise Separation("response is constant; both classes required")

    beta = np.zeros(p)
    converged = False
    for _ in range(IRLS_MAX_ITER):
        eta = X @ beta
        mu = expit(eta)
        w = mu * (1.0 - mu)
        if w.max() < 1e-10:
            raise Separation("all IRLS weights collapsed to zero")
        sw = np.sqrt(w)
        # working response for the weighted least-squares step
        zwork = eta + (y - mu) / np.maximum(w, 1e-300)
        beta_new, _ = _qr_solve(sw * zwork, sw[:, None] * X)
        if np.abs(beta_new).max() > DIVERGENCE_BOUND:
            raise Separation("coefficients diverged; data look separated")
        step = np.abs(beta_new - beta).max()
        beta = beta_new
        if step < IRLS_TOL * (1.0 + np.abs(beta).max()):
            converged = True
            break
    if not converged:
        raise NonConvergence(f"IRLS did not converge in {IRLS_MAX_ITER} iterations")

    mu = expit(X @ beta)
    w = mu * (1.0 - mu)
    # Fisher information (XᵀWX)⁻¹ via the QR of the weighted design
    _, R = np.linalg.qr(np.sqrt(w)[:, None] * X)
    Rinv = solve_triangular(R, np.eye(p), lower=False)
    cov = Rinv @ Rinv.T
    return ModelFit(
        coefficients=beta,
        cov=cov,
        residual_variance=None,
        n_obs=n,
        converged=True,
        family=Family.LOGISTIC,
    )
