import numpy as np
import pytest
from scipy.special import expit

from recalib.exceptions import DimensionMismatch, NonConvergence, RankDeficient, Separation
from recalib.regress import Family, fit_logistic, fit_ols


def rng(seed=0):
    return np.random.default_rng(seed)


class TestOls:
    def test_exact_line(self):
        x = np.array([0.0, 1.0, 2.0, 3.0])
        X = np.column_stack([np.ones(4), x])
        fit = fit_ols(2.0 * x, X)
        np.testing.assert_allclose(fit.coefficients, [0.0, 2.0], atol=1e-12)
        assert fit.residual_variance == pytest.approx(0.0, abs=1e-24)

    def test_intercept_only_mean(self):
        y = np.array([5.0, 5.0, 5.0])
        fit = fit_ols(y, np.ones((3, 1)))
        assert fit.coefficients[0] == pytest.approx(5.0)

    def test_matches_normal_equations_oracle(self):
        r = rng(42)
        X = np.column_stack([np.ones(50), r.normal(size=(50, 2))])
        y = X @ np.array([1.0, -0.5, 2.0]) + r.normal(size=50)
        fit = fit_ols(y, X)
        # independent route: Cholesky solve of X'X b = X'y
        xtx = X.T @ X
        L = np.linalg.cholesky(xtx)
        b = np.linalg.solve(L.T, np.linalg.solve(L, X.T @ y))
        np.testing.assert_allclose(fit.coefficients, b, rtol=1e-8)
        resid = y - X @ b
        s2 = resid @ resid / (50 - 3)
        np.testing.assert_allclose(fit.cov, s2 * np.linalg.inv(xtx), rtol=1e-7)

    def test_residuals_orthogonal_to_design(self):
        r = rng(7)
        X = np.column_stack([np.ones(200), r.normal(size=(200, 3))])
        y = r.normal(size=200)
        fit = fit_ols(y, X)
        resid = y - X @ fit.coefficients
        scale = np.abs(X).max()
        assert np.abs(X.T @ resid).max() < 1e-8 * 200 * scale

    def test_row_permutation_invariance(self):
        r = rng(3)
        X = np.column_stack([np.ones(80), r.normal(size=(80, 2))])
        y = r.normal(size=80)
        perm = r.permutation(80)
        a = fit_ols(y, X)
        b = fit_ols(y[perm], X[perm])
        np.testing.assert_allclose(a.coefficients, b.coefficients, rtol=1e-12)

    def test_column_rescaling(self):
        r = rng(11)
        X = np.column_stack([np.ones(60), r.normal(size=60)])
        y = r.normal(size=60)
        c = 7.5
        Xs = X.copy()
        Xs[:, 1] *= c
        a, b = fit_ols(y, X), fit_ols(y, Xs)
        assert b.coefficients[1] == pytest.approx(a.coefficients[1] / c, rel=1e-10)
        assert b.se(1) == pytest.approx(a.se(1) / c, rel=1e-10)

    def test_rank_deficient_raises(self):
        x = np.arange(10.0)
        X = np.column_stack([np.ones(10), x, 2.0 * x])
        with pytest.raises(RankDeficient):
            fit_ols(x, X)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            fit_ols(np.zeros(5), np.ones((4, 1)))
        with pytest.raises(DimensionMismatch):
            fit_ols(np.zeros(2), np.ones((2, 2)))

    def test_cov_symmetric_psd(self):
        r = rng(5)
        X = np.column_stack([np.ones(100), r.normal(size=(100, 3))])
        fit = fit_ols(r.normal(size=100), X)
        np.testing.assert_allclose(fit.cov, fit.cov.T, rtol=1e-10)
        assert np.diag(fit.cov).min() >= 0


class TestLogistic:
    def test_intercept_only_logit_prevalence(self):
        y = np.array([1.0] * 25 + [0.0] * 75)
        fit = fit_logistic(y, np.ones((100, 1)))
        assert fit.coefficients[0] == pytest.approx(np.log(0.25 / 0.75), abs=1e-8)

    def test_gradient_at_solution(self):
        r = rng(21)
        X = np.column_stack([np.ones(500), r.normal(size=(500, 2))])
        p = expit(X @ np.array([-1.0, 0.7, -0.3]))
        y = (r.random(500) < p).astype(float)
        fit = fit_logistic(y, X)
        grad = X.T @ (y - expit(X @ fit.coefficients))
        assert np.abs(grad).max() < 1e-6

    def test_matches_newton_step_oracle(self):
        # 5-observation instance small enough to iterate Newton by hand
        X = np.column_stack([np.ones(5), np.array([-2.0, -1.0, 0.0, 1.0, 2.0])])
        y = np.array([0.0, 0.0, 1.0, 0.0, 1.0])
        beta = np.zeros(2)
        for _ in range(200):
            mu = expit(X @ beta)
            w = mu * (1 - mu)
            info = X.T @ (w[:, None] * X)
            beta = beta + np.linalg.solve(info, X.T @ (y - mu))
        fit = fit_logistic(y, X)
        np.testing.assert_allclose(fit.coefficients, beta, atol=1e-8)

    def test_recovers_known_slope(self):
        r = rng(99)
        x = r.normal(size=20000)
        X = np.column_stack([np.ones(20000), x])
        p = expit(-5.0 + 0.5 * x)
        y = (r.random(20000) < p).astype(float)
        fit = fit_logistic(y, X)
        assert abs(fit.coefficients[1] - 0.5) < 3 * fit.se(1)

    def test_separation_raises(self):
        x = np.linspace(-2, 2, 40)
        y = (x > 0).astype(float)
        X = np.column_stack([np.ones(40), x])
        with pytest.raises((Separation, NonConvergence)):
            fit_logistic(y, X)

    def test_constant_response_rejected(self):
        with pytest.raises(Separation):
            fit_logistic(np.ones(10), np.ones((10, 1)))

    def test_non_binary_rejected(self):
        with pytest.raises(DimensionMismatch):
            fit_logistic(np.array([0.0, 0.5, 1.0, 1.0]), np.ones((4, 1)))

    def test_family_tag(self):
        y = np.array([1.0] * 5 + [0.0] * 5)
        fit = fit_logistic(y, np.ones((10, 1)))
        assert fit.family is Family.LOGISTIC
        assert fit.converged
