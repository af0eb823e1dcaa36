import numpy as np
import pytest

from recalib.data import MainSample, ValidationSample
from recalib.exceptions import EmptyBin, InvalidConfig, NearZeroCalibrationSlope, ZeroSlope
from recalib.regress import Family
from recalib.rsw import (
    delta_variance,
    estimate,
    estimate_effect_mod_parametric,
    estimate_nonparametric,
    infer_strategy,
    small_me_diagnostic,
)
from recalib.scenario import DagId, ScenarioConfig, generate
from recalib.strategies import AdjustmentStrategy as S


def make_samples(n_main=2000, n_valid=500, seed=0, error_sd=0.6, beta=1.5):
    """Simple no-covariate world: Z = X + error, Y = beta X + noise."""
    rng = np.random.default_rng(seed)
    x_m = rng.standard_normal(n_main)
    z_m = x_m + error_sd * rng.standard_normal(n_main)
    y_m = beta * x_m + rng.standard_normal(n_main)
    v_m = rng.standard_normal(n_main)
    x_v = rng.standard_normal(n_valid)
    z_v = x_v + error_sd * rng.standard_normal(n_valid)
    v_v = rng.standard_normal(n_valid)
    main = MainSample(z=z_m, y=y_m, covariates={"v": v_m})
    valid = ValidationSample(x=x_v, z=z_v, covariates={"v": v_v})
    return main, valid


class TestDeltaVariance:
    def test_worked_example(self):
        # gamma = 0.4 (var 0.01), alpha = 0.8 (var 0.0025):
        # 0.01/0.64 + 0.16*0.0025/0.4096
        expected = 0.01 / 0.64 + 0.16 * 0.0025 / 0.8**4
        assert delta_variance(0.4, 0.01, 0.8, 0.0025) == pytest.approx(expected, rel=1e-12)

    def test_error_free_denominator(self):
        assert delta_variance(0.4, 0.01, 0.8, 0.0) == pytest.approx(0.01 / 0.64)

    def test_zero_slope_raises(self):
        with pytest.raises(ZeroSlope):
            delta_variance(0.4, 0.01, 0.0, 0.0025)

    def test_negative_variance_rejected(self):
        with pytest.raises(InvalidConfig):
            delta_variance(0.4, -0.01, 0.8, 0.0025)


class TestEstimate:
    def test_perfect_surrogate_reduces_to_ols(self):
        # when Z == X the calibration slope is 1 and no correction happens
        main, valid = make_samples(error_sd=1e-9)
        rng = np.random.default_rng(5)
        x = rng.standard_normal(3000)
        y = 0.7 * x + 0.1 * rng.standard_normal(3000)
        main = MainSample(z=x, y=y, covariates={})
        valid = ValidationSample(x=x[:500], z=x[:500], covariates={})
        est = estimate(main, valid)
        naive = np.polyfit(x, y, 1)[0]
        assert est.alpha_hat == pytest.approx(1.0, abs=1e-9)
        assert est.beta_hat == pytest.approx(naive, rel=1e-9)

    def test_recovers_truth_at_scale(self):
        main, valid = make_samples(n_main=200_000, n_valid=200_000, beta=1.5)
        est = estimate(main, valid)
        assert est.beta_hat == pytest.approx(1.5, rel=0.02)
        # attenuation factor is 1/(1+0.36); the naive slope must undershoot
        naive = np.polyfit(main.z, main.y, 1)[0]
        assert naive < 1.5 * 0.8

    def test_se_decomposition(self):
        main, valid = make_samples()
        est = estimate(main, valid)
        rebuilt = delta_variance(est.gamma_hat, est.gamma_se**2, est.alpha_hat, est.alpha_se**2)
        assert est.se**2 == pytest.approx(rebuilt, rel=1e-12)
        assert est.ci_low == pytest.approx(est.beta_hat - 1.96 * est.se)
        assert est.ci_high == pytest.approx(est.beta_hat + 1.96 * est.se)

    def test_surrogate_scale_equivariance(self):
        # rescaling Z changes neither the corrected estimate nor its SE
        main, valid = make_samples()
        est = estimate(main, valid, covariates_outcome=("v",), covariates_mem=("v",))
        main2 = MainSample(z=10.0 * main.z, y=main.y, covariates=main.covariates)
        valid2 = ValidationSample(x=valid.x, z=10.0 * valid.z, covariates=valid.covariates)
        est2 = estimate(main2, valid2, covariates_outcome=("v",), covariates_mem=("v",))
        assert est2.beta_hat == pytest.approx(est.beta_hat, rel=1e-10)
        assert est2.se == pytest.approx(est.se, rel=1e-10)

    def test_exposure_unit_contract(self):
        # doubling X in the validation sample halves the per-unit estimate
        main, valid = make_samples()
        est = estimate(main, valid)
        valid2 = ValidationSample(x=2.0 * valid.x, z=valid.z, covariates=valid.covariates)
        est2 = estimate(main, valid2)
        assert est2.beta_hat == pytest.approx(est.beta_hat / 2.0, rel=1e-10)

    def test_strategy_inference(self):
        assert infer_strategy(("v",), ("v",)) is S.OM
        assert infer_strategy((), ()) is S.NONE_NONE
        assert infer_strategy((), ("v",)) is S.NONE_M
        assert infer_strategy(("v",), ()) is S.O_NONE
        main, valid = make_samples()
        assert estimate(main, valid, covariates_outcome=("v",)).strategy is S.O_NONE

    def test_inconsistent_strategy_and_sets_rejected(self):
        main, valid = make_samples()
        with pytest.raises(InvalidConfig):
            estimate(main, valid, strategy=S.OM)  # OM with no covariates
        with pytest.raises(InvalidConfig):
            estimate(main, valid, strategy=S.NONE_NONE, covariates_mem=("v",))

    def test_missing_covariate_rejected(self):
        main, valid = make_samples()
        with pytest.raises(InvalidConfig):
            estimate(main, valid, covariates_outcome=("w",), covariates_mem=("w",))

    def test_uninformative_surrogate_guarded(self):
        rng = np.random.default_rng(1)
        main = MainSample(z=rng.standard_normal(500), y=rng.standard_normal(500), covariates={})
        valid = ValidationSample(
            x=rng.standard_normal(300), z=rng.standard_normal(300), covariates={}
        )
        with pytest.raises(NearZeroCalibrationSlope):
            estimate(main, valid)

    def test_logistic_outcome_family(self):
        config = ScenarioConfig(
            dag=DagId.Dag4,
            eta_v=0.4,
            theta_x=0.5,
            theta_v=0.1,
            beta_x=0.5,
            beta_v=0.8,
            outcome="binary",
            n_ms=50_000,
            n_vs=5_000,
        )
        sample = generate(config)
        est = estimate(
            sample.main,
            sample.validation,
            covariates_outcome=("v",),
            covariates_mem=("v",),
            outcome_family=Family.LOGISTIC,
        )
        assert est.outcome_family is Family.LOGISTIC
        assert est.beta_hat == pytest.approx(0.5, abs=0.15)


class TestSmallMeDiagnostic:
    class FakeFit:
        def __init__(self, residual_variance):
            self.residual_variance = residual_variance

    def test_small_error_no_warning(self):
        out = small_me_diagnostic(self.FakeFit(0.1), beta_hat=1.0)
        assert out["stat"] == pytest.approx(0.1)
        assert not out["warn"]

    def test_large_error_warns_for_common_outcome(self):
        out = small_me_diagnostic(self.FakeFit(1.0), beta_hat=1.0, outcome_prevalence=0.3)
        assert out["warn"] and not out["rare_disease_ok"]

    def test_large_error_tolerated_for_rare_outcome(self):
        out = small_me_diagnostic(self.FakeFit(1.0), beta_hat=1.0, outcome_prevalence=0.01)
        assert out["rare_disease_ok"] and not out["warn"]

    def test_scales_with_effect_size(self):
        weak = small_me_diagnostic(self.FakeFit(1.0), beta_hat=0.1)
        assert weak["stat"] == pytest.approx(0.01)
        assert not weak["warn"]


class TestEffectModification:
    @staticmethod
    def interaction_samples(n=100_000, seed=3):
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(n)
        x = v + rng.standard_normal(n)
        z = x + 0.6 * rng.standard_normal(n)
        y = (0.5 + 0.3 * v) * x + rng.standard_normal(n)
        half = n // 2
        main = MainSample(z=z[:half], y=y[:half], covariates={"v": v[:half]})
        valid = ValidationSample(x=x[half:], z=z[half:], covariates={"v": v[half:]})
        return main, valid

    def test_recovers_varying_slope(self):
        main, valid = self.interaction_samples()
        est = estimate_effect_mod_parametric(main, valid, "v")
        for value in (-1.0, 0.0, 1.0):
            assert est.evaluator(value) == pytest.approx(0.5 + 0.3 * value, abs=0.03)

    def test_evaluator_matches_components(self):
        main, valid = self.interaction_samples(n=5000)
        est = estimate_effect_mod_parametric(main, valid, "v")
        v0 = 0.7
        assert est.evaluator(v0) == pytest.approx(
            (est.beta_z_star + est.beta_zv_star * v0) / est.alpha_z, rel=1e-12
        )

    def test_requires_covariate_in_both_samples(self):
        main, valid = self.interaction_samples(n=2000)
        with pytest.raises(InvalidConfig):
            estimate_effect_mod_parametric(main, valid, "w")


class TestNonparametric:
    @staticmethod
    def linear_world(n=60_000, seed=4, slope=2.0):
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(n)
        x = rng.standard_normal(n)
        z = x + 0.5 * rng.standard_normal(n)
        y = slope * x + 0.3 * rng.standard_normal(n)
        half = n // 2
        main = MainSample(z=z[:half], y=y[:half], covariates={"v": v[:half]})
        valid = ValidationSample(x=x[half:], z=z[half:], covariates={"v": v[half:]})
        return main, valid

    def test_recovers_linear_slope(self):
        main, valid = self.linear_world()
        for strategy in S:
            est = estimate_nonparametric(main, valid, strategy, "v", z_lo=0, z_hi=4, v_bin=1)
            assert est == pytest.approx(2.0, abs=0.1)

    def test_identical_bins_rejected(self):
        main, valid = self.linear_world(n=2000)
        with pytest.raises(InvalidConfig):
            estimate_nonparametric(main, valid, S.OM, "v", z_lo=1, z_hi=1, v_bin=0)

    def test_sparse_bin_raises(self):
        main, valid = self.linear_world(n=600)
        with pytest.raises(EmptyBin):
            estimate_nonparametric(
                main, valid, S.OM, "v", z_lo=0, z_hi=4, v_bin=0, z_bins=20, v_bins=10
            )
