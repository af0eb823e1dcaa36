import pytest

from recalib.advisor import (
    MINIMAL_SET_LABELS,
    NONCOLLAPSIBILITY_CAVEAT,
    VALIDITY_TABLE,
    CovariateRole,
    advise,
    classify,
    quantify,
    role_from_label,
)
from recalib.analytic import PopulationParams
from recalib.exceptions import InvalidConfig, UnsupportedRole


def role(name, label, **kwargs):
    return role_from_label(name, label, **kwargs)


class TestClassify:
    def test_all_eight_triples(self):
        assert classify(False, False, True) == "V1"
        assert classify(False, True, True) == "V2"
        assert classify(True, False, True) == "V3"
        assert classify(True, True, True) == "V4"
        assert classify(False, False, False) == "V5"
        assert classify(False, True, False) == "V6"
        assert classify(True, False, False) == "V7"
        assert classify(True, True, False) == "V8"

    def test_role_label_round_trip(self):
        for label in VALIDITY_TABLE:
            assert role("c", label).label == label

    def test_unknown_label_rejected(self):
        with pytest.raises(InvalidConfig):
            role_from_label("c", "V9")


class TestValidityTable:
    def test_confounders_require_full_adjustment(self):
        for label in MINIMAL_SET_LABELS:
            row = VALIDITY_TABLE[label]
            assert row["OM"] == "valid"
            assert row["NoneNone"] == row["NoneM"] == row["ONone"] == "biased"

    def test_outcome_only_covariate_efficient_when_adjusted(self):
        row = VALIDITY_TABLE["V1"]
        assert row["OM"] == row["ONone"] == "efficient"
        assert row["NoneNone"] == row["NoneM"] == "valid"

    def test_irrelevant_covariate_all_valid(self):
        assert set(VALIDITY_TABLE["V5"].values()) == {"valid"}

    def test_error_only_covariates(self):
        assert VALIDITY_TABLE["V6"]["OM"] == "efficient"
        assert VALIDITY_TABLE["V7"]["NoneNone"] == "efficient"
        for label in ("V6", "V7", "V8"):
            row = VALIDITY_TABLE[label]
            assert row["NoneM"] == row["ONone"] == "biased"
            assert row["OM"] != "biased" and row["NoneNone"] != "biased"


class TestAdvise:
    FIBER_ROLES = [
        role("marital", "V1"),
        role("sleep", "V2"),
        role("smoking", "V3"),
        role("age", "V4"),
        role("sunscreen", "V7"),
    ]

    def test_minimal_set(self):
        advice = advise(self.FIBER_ROLES)
        assert advice.minimal_set == ("age", "sleep", "smoking")

    def test_order_and_duplicates_do_not_matter(self):
        a = advise(self.FIBER_ROLES)
        b = advise(list(reversed(self.FIBER_ROLES)) + [role("age", "V4")])
        assert a.minimal_set == b.minimal_set
        assert {n: adv.recommended for n, adv in a.per_covariate.items()} == {
            n: adv.recommended for n, adv in b.per_covariate.items()
        }

    def test_recommendations(self):
        advice = advise(self.FIBER_ROLES)
        rec = {n: adv.recommended for n, adv in advice.per_covariate.items()}
        assert rec == {
            "marital": "OM",
            "sleep": "OM",
            "smoking": "OM",
            "age": "OM",
            "sunscreen": "NoneNone",
        }

    def test_confounder_missing_from_validation_falls_back(self):
        advice = advise([role("sleep", "V2", available_in_validation=False)])
        assert advice.per_covariate["sleep"].recommended == "ONone"
        assert any("does not remove bias" in w for w in advice.warnings)

    def test_conflicting_declarations_rejected(self):
        with pytest.raises(InvalidConfig):
            advise([role("age", "V4"), role("age", "V2")])

    def test_mediator_rejected(self):
        bad = CovariateRole(
            name="bmi", affects_x=False, affects_z=False, affects_y=True, caused_by_exposure=True
        )
        with pytest.raises(UnsupportedRole):
            advise([bad])

    def test_logistic_outcome_adds_noncollapsibility_caveat(self):
        advice = advise([role("age", "V4")], outcome_family="logistic")
        assert NONCOLLAPSIBILITY_CAVEAT in advice.warnings
        linear = advise([role("age", "V4")])
        assert NONCOLLAPSIBILITY_CAVEAT not in linear.warnings

    def test_v8_prompts_quantification(self):
        advice = advise([role("batch", "V8")])
        assert any("quantify" in w for w in advice.warnings)


class TestQuantify:
    P = PopulationParams(
        rho_xz=0.7,
        rho_vx=0.3,
        rho_vz=0.25,
        rho_yz=0.35,
        rho_vy=0.4,
        sigma_x=1.0,
        sigma_y=1.2,
        sigma_z=0.9,
        n_ms=5000,
        n_vs=400,
    )

    def test_irrelevant_covariate_all_unit_efficiency(self):
        advice = quantify([role("noise", "V5")], self.P)
        ares = advice.per_covariate["noise"].are
        assert set(ares) == {"OM", "NoneNone", "NoneM", "ONone"}
        for value in ares.values():
            assert value == pytest.approx(1.0, abs=1e-9)

    def test_biased_strategies_not_quantified(self):
        advice = quantify([role("age", "V4")], self.P)
        assert set(advice.per_covariate["age"].are) == {"OM"}
        assert advice.per_covariate["age"].are["OM"] == 1.0

    def test_v7_efficiency_exceeds_one(self):
        advice = quantify([role("sunscreen", "V7")], self.P)
        ares = advice.per_covariate["sunscreen"].are
        assert ares["NoneNone"] > 1.0

    def test_v8_recommendation_follows_numbers(self):
        advice = quantify([role("batch", "V8")], self.P)
        ares = advice.per_covariate["batch"].are
        rec = advice.per_covariate["batch"].recommended
        assert rec == ("NoneNone" if ares["NoneNone"] > 1.0 else "OM")
        assert any("ARE(NoneNone)" in w for w in advice.warnings)
