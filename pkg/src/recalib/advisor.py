"""Covariate-selection guidance.

A covariate is classified by which of the three variables it affects: the true
exposure X, the surrogate Z (given X, i.e. the measurement error), and the
outcome Y (given X). The eight possible triples map to the eight structures
V1..V8, and each structure fixes which adjustment strategies remain unbiased
and which is most efficient. Roles are declared by the analyst from subject
matter knowledge; nothing here tests independencies in data.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .analytic import (
    DAG_ZERO_CONSTRAINTS,
    PopulationParams,
    are,
    conditionals_from_params,
    params_from_conditionals,
)
from .exceptions import InvalidConfig, UnsupportedRole
from .strategies import AdjustmentStrategy

_LABELS = {
    (False, False, True): "V1",
    (False, True, True): "V2",
    (True, False, True): "V3",
    (True, True, True): "V4",
    (False, False, False): "V5",
    (False, True, False): "V6",
    (True, False, False): "V7",
    (True, True, False): "V8",
}

#: Validity/efficiency of each strategy per covariate type, for continuous
#: outcomes under linear models. "efficient" implies valid.
VALIDITY_TABLE: dict[str, dict[str, str]] = {
    "V1": {"OM": "efficient", "NoneNone": "valid", "NoneM": "valid", "ONone": "efficient"},
    "V2": {"OM": "valid", "NoneNone": "biased", "NoneM": "biased", "ONone": "biased"},
    "V3": {"OM": "valid", "NoneNone": "biased", "NoneM": "biased", "ONone": "biased"},
    "V4": {"OM": "valid", "NoneNone": "biased", "NoneM": "biased", "ONone": "biased"},
    "V5": {"OM": "valid", "NoneNone": "valid", "NoneM": "valid", "ONone": "valid"},
    "V6": {"OM": "efficient", "NoneNone": "valid", "NoneM": "biased", "ONone": "biased"},
    "V7": {"OM": "valid", "NoneNone": "efficient", "NoneM": "biased", "ONone": "biased"},
    "V8": {"OM": "valid", "NoneNone": "valid", "NoneM": "biased", "ONone": "biased"},
}

MINIMAL_SET_LABELS = ("V2", "V3", "V4")

NONCOLLAPSIBILITY_CAVEAT = (
    "efficiency flags assume a continuous outcome with linear models; with a "
    "logistic outcome model, marginal and conditional log-odds effects differ "
    "(non-collapsibility) and the linear efficiency ordering need not hold"
)


@dataclass(frozen=True)
class CovariateRole:
    name: str
    affects_x: bool
    affects_z: bool
    affects_y: bool
    available_in_validation: bool = True
    caused_by_exposure: bool = False

    @property
    def label(self) -> str:
        return _LABELS[(self.affects_x, self.affects_z, self.affects_y)]


def classify(affects_x: bool, affects_z: bool, affects_y: bool) -> str:
    """Map the (affects X, affects Z, affects Y) triple to V1..V8."""
    return _LABELS[(bool(affects_x), bool(affects_z), bool(affects_y))]


_LABEL_FLAGS = {label: flags for flags, label in _LABELS.items()}


def role_from_label(name: str, label: str, available_in_validation: bool = True) -> CovariateRole:
    """Build a role from a V1..V8 label (the CLI's declaration format)."""
    if label not in _LABEL_FLAGS:
        raise InvalidConfig(f"unknown covariate class {label!r}; expected V1..V8")
    ax, az, ay = _LABEL_FLAGS[label]
    return CovariateRole(
        name=name,
        affects_x=ax,
        affects_z=az,
        affects_y=ay,
        available_in_validation=available_in_validation,
    )


@dataclass(frozen=True)
class CovariateAdvice:
    label: str
    recommended: str
    rationale: str
    validity: dict[str, str]
    are: dict[str, float] | None = None


@dataclass(frozen=True)
class Advice:
    minimal_set: tuple[str, ...]
    per_covariate: dict[str, CovariateAdvice]
    warnings: tuple[str, ...] = field(default=())


def _advise_one(role: CovariateRole, warnings: list[str]) -> CovariateAdvice:
    label = role.label
    validity = dict(VALIDITY_TABLE[label])
    if label in MINIMAL_SET_LABELS:
        if role.available_in_validation:
            return CovariateAdvice(
                label=label,
                recommended="OM",
                rationale="required in both models: any other placement leaves the corrected estimate biased",
                validity=validity,
            )
        warnings.append(
            f"{role.name}: not measured in the validation study; adjusting in the outcome "
            "model only reduces but does not remove bias, and is reliable only when the "
            "covariate is weakly related to the measurement error"
        )
        return CovariateAdvice(
            label=label,
            recommended="ONone",
            rationale="fallback: unavailable in validation data, so the calibration model cannot adjust for it",
            validity=validity,
        )
    if label == "V1":
        return CovariateAdvice(
            label=label,
            recommended="OM" if role.available_in_validation else "ONone",
            rationale="outcome-model inclusion is unbiased either way and improves precision for linear outcomes",
            validity=validity,
        )
    if label == "V5":
        return CovariateAdvice(
            label=label,
            recommended="NoneNone",
            rationale="unrelated to exposure, error and outcome: all placements agree, so leave it out",
            validity=validity,
        )
    if label == "V6":
        return CovariateAdvice(
            label=label,
            recommended="OM",
            rationale="adjusting in both models is unbiased and more efficient than ignoring it",
            validity=validity,
        )
    if label == "V7":
        return CovariateAdvice(
            label=label,
            recommended="NoneNone",
            rationale="ignoring it is unbiased and more efficient than adjusting in both models",
            validity=validity,
        )
    # V8
    warnings.append(
        f"{role.name}: both OM and NoneNone are unbiased but their relative efficiency "
        "depends on the correlation structure and sample sizes; use quantify() with "
        "population parameters to pick one"
    )
    return CovariateAdvice(
        label=label,
        recommended="OM",
        rationale="unbiased either in both models or in neither; efficiency ranking depends on correlations",
        validity=validity,
    )


def advise(roles: list[CovariateRole], outcome_family: str = "linear") -> Advice:
    """Minimal adjustment set plus per-covariate strategy guidance."""
    seen: dict[str, CovariateRole] = {}
    for role in roles:
        if role.caused_by_exposure:
            raise UnsupportedRole(
                f"{role.name}: covariates affected by the exposure (mediators, colliders) "
                "are out of scope for this framework"
            )
        if role.name in seen and seen[role.name] != role:
            raise InvalidConfig(f"conflicting role declarations for {role.name!r}")
        seen.setdefault(role.name, role)

    warnings: list[str] = []
    per_covariate = {name: _advise_one(role, warnings) for name, role in seen.items()}
    minimal = tuple(
        sorted(name for name, adv in per_covariate.items() if adv.label in MINIMAL_SET_LABELS)
    )
    if outcome_family == "logistic" and per_covariate:
        warnings.append(NONCOLLAPSIBILITY_CAVEAT)
    return Advice(
        minimal_set=minimal, per_covariate=per_covariate, warnings=tuple(warnings)
    )


def quantify(roles: list[CovariateRole], p: PopulationParams) -> Advice:
    """Replace qualitative efficiency flags with computed relative efficiencies.

    ``p`` describes the joint distribution of (X, Z, V, Y) for the covariate in
    question; the covariate's structural zeros are imposed before evaluation,
    so a V5 covariate always reports all efficiencies equal to 1 regardless of
    the correlations supplied.
    """
    advice = advise(roles)
    per_covariate = dict(advice.per_covariate)
    warnings = list(advice.warnings)
    for name, cov_advice in per_covariate.items():
        dag = int(cov_advice.label[1])
        cond = conditionals_from_params(p)
        for coord in DAG_ZERO_CONSTRAINTS[dag]:
            cond[coord] = 0.0
        p_dag = params_from_conditionals(
            cond,
            sigma_x=p.sigma_x,
            sigma_y=p.sigma_y,
            sigma_z=p.sigma_z,
            n_ms=p.n_ms,
            n_vs=p.n_vs,
        )
        ares = {
            tag: are(p_dag, AdjustmentStrategy.from_tag(tag))
            for tag, flag in cov_advice.validity.items()
            if flag != "biased"
        }
        recommended = cov_advice.recommended
        if cov_advice.label == "V8":
            recommended = "NoneNone" if ares["NoneNone"] > 1.0 else "OM"
            warnings.append(
                f"{name}: ARE(NoneNone) = {ares['NoneNone']:.2f} at the supplied "
                f"parameters; recommending {recommended}"
            )
        per_covariate[name] = replace(cov_advice, are=ares, recommended=recommended)
    return Advice(
        minimal_set=advice.minimal_set,
        per_covariate=per_covariate,
        warnings=tuple(warnings),
    )
