"""Synthetic data-generating process for the eight covariate structures.

One scalar covariate V relates to the true exposure X, the surrogate Z, and
the outcome Y through three coefficients; setting a coefficient to zero
removes the corresponding arrow and selects one of eight structures:

    X = eta_v * V + e_x
    Z = theta_x * X + theta_v * V + e_z
    Y = beta_x * X + beta_v * V + e_y            (continuous outcome)
    Y ~ Bernoulli(expit(-5 + beta_x X + beta_v V))  (binary outcome)

V is standard normal or Bernoulli(0.4). Each replicate draws one i.i.d. pool
of n_ms + n_vs records; the first n_vs form the external validation study
(X, Z, V retained) and the rest the main study (Z, V, Y retained).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .analytic import PopulationParams
from .data import MainSample, ValidationSample
from .exceptions import InvalidConfig

DEFAULT_SEED = 20260823
BERNOULLI_P = 0.4

#: Which DGP coefficients must be nonzero under each structure:
#: (eta_v nonzero, theta_v nonzero, beta_v nonzero)
_DAG_PATTERN: dict[int, tuple[bool, bool, bool]] = {
    1: (False, False, True),
    2: (False, True, True),
    3: (True, False, True),
    4: (True, True, True),
    5: (False, False, False),
    6: (False, True, False),
    7: (True, False, False),
    8: (True, True, False),
}


class DagId(IntEnum):
    Dag1 = 1
    Dag2 = 2
    Dag3 = 3
    Dag4 = 4
    Dag5 = 5
    Dag6 = 6
    Dag7 = 7
    Dag8 = 8


@dataclass(frozen=True)
class ScenarioConfig:
    dag: DagId
    eta_v: float
    theta_x: float
    theta_v: float
    beta_x: float
    beta_v: float
    logistic_intercept: float = -5.0
    noise_sd_x: float = 1.0
    noise_sd_z: float = 0.5
    noise_sd_y: float = 1.0
    v_dist: str = "normal"  # "normal" or "bernoulli"
    outcome: str = "continuous"  # "continuous" or "binary"
    n_ms: int = 4600
    n_vs: int = 400
    replicates: int = 1000
    seed: int = DEFAULT_SEED
    name: str = ""

    def __post_init__(self):
        if self.v_dist not in ("normal", "bernoulli"):
            raise InvalidConfig(f"unknown v_dist {self.v_dist!r}")
        if self.outcome not in ("continuous", "binary"):
            raise InvalidConfig(f"unknown outcome {self.outcome!r}")
        for field_name in ("noise_sd_x", "noise_sd_z", "noise_sd_y"):
            if getattr(self, field_name) <= 0:
                raise InvalidConfig(f"{field_name} must be positive")
        if min(self.n_ms, self.n_vs, self.replicates) <= 0:
            raise InvalidConfig("sample sizes and replicate count must be positive")
        if self.seed < 0 or self.seed >= 2**64:
            raise InvalidConfig("seed must fit in 64 unsigned bits")
        want = _DAG_PATTERN[int(self.dag)]
        have = (self.eta_v != 0.0, self.theta_v != 0.0, self.beta_v != 0.0)
        if want != have:
            labels = ("eta_v", "theta_v", "beta_v")
            detail = ", ".join(
                f"{lab} {'nonzero' if w else 'zero'}" for lab, w in zip(labels, want)
            )
            raise InvalidConfig(f"DAG {int(self.dag)} requires {detail}")

    @property
    def sigma_v(self) -> float:
        return 1.0 if self.v_dist == "normal" else math.sqrt(BERNOULLI_P * (1 - BERNOULLI_P))


@dataclass(frozen=True)
class GeneratedSample:
    main: MainSample
    validation: ValidationSample
    truth: float


def _rng(seed: int, replicate_index: int) -> np.random.Generator:
    # counter-based generator: independent, reproducible per-replicate substreams
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replicate_index,))
    return np.random.Generator(np.random.Philox(ss))


def generate(config: ScenarioConfig, replicate_index: int = 0) -> GeneratedSample:
    """Draw one replicate; deterministic given (config.seed, replicate_index)."""
    if replicate_index < 0:
        raise InvalidConfig("replicate_index must be nonnegative")
    rng = _rng(config.seed, replicate_index)
    n = config.n_ms + config.n_vs
    if config.v_dist == "normal":
        v = rng.standard_normal(n)
    else:
        v = (rng.random(n) < BERNOULLI_P).astype(float)
    x = config.eta_v * v + config.noise_sd_x * rng.standard_normal(n)
    z = config.theta_x * x + config.theta_v * v + config.noise_sd_z * rng.standard_normal(n)
    if config.outcome == "continuous":
        y = config.beta_x * x + config.beta_v * v + config.noise_sd_y * rng.standard_normal(n)
    else:
        logit = config.logistic_intercept + config.beta_x * x + config.beta_v * v
        p = 1.0 / (1.0 + np.exp(-logit))
        y = (rng.random(n) < p).astype(float)
    validation = ValidationSample(x=x[: config.n_vs], z=z[: config.n_vs], covariates={"v": v[: config.n_vs]})
    main = MainSample(z=z[config.n_vs :], y=y[config.n_vs :], covariates={"v": v[config.n_vs :]})
    return GeneratedSample(main=main, validation=validation, truth=config.beta_x)


def implied_correlations(config: ScenarioConfig) -> PopulationParams:
    """Exact moment propagation of the DGP coefficients to marginal correlations.

    Only defined for the continuous outcome (the binary outcome model is not
    linear in X and V, so these second moments do not describe it).
    """
    if config.outcome != "continuous":
        raise InvalidConfig("implied correlations are defined for continuous outcomes only")
    s2v = config.sigma_v**2
    var_x = config.eta_v**2 * s2v + config.noise_sd_x**2
    cov_vx = config.eta_v * s2v
    var_z = (
        config.theta_x**2 * var_x
        + config.theta_v**2 * s2v
        + 2.0 * config.theta_x * config.theta_v * cov_vx
        + config.noise_sd_z**2
    )
    cov_xz = config.theta_x * var_x + config.theta_v * cov_vx
    cov_vz = config.theta_x * cov_vx + config.theta_v * s2v
    var_y = (
        config.beta_x**2 * var_x
        + config.beta_v**2 * s2v
        + 2.0 * config.beta_x * config.beta_v * cov_vx
        + config.noise_sd_y**2
    )
    cov_yz = config.beta_x * cov_xz + config.beta_v * cov_vz
    cov_vy = config.beta_x * cov_vx + config.beta_v * s2v
    sx, sy, sz, sv = math.sqrt(var_x), math.sqrt(var_y), math.sqrt(var_z), math.sqrt(s2v)
    return PopulationParams(
        rho_xz=cov_xz / (sx * sz),
        rho_vx=cov_vx / (sv * sx),
        rho_vz=cov_vz / (sv * sz),
        rho_yz=cov_yz / (sy * sz),
        rho_vy=cov_vy / (sv * sy),
        sigma_x=sx,
        sigma_y=sy,
        sigma_z=sz,
        n_ms=config.n_ms,
        n_vs=config.n_vs,
    )


# Scenario rows: slug -> (eta_v, theta_x, theta_v, beta_x, beta_v, v_dist)
_BASE = {
    1: (0.0, 0.5, 0.0, 0.5, 0.8),
    2: (0.0, 0.5, 0.1, 0.5, 0.8),
    3: (0.4, 0.5, 0.0, 0.5, 0.8),
    4: (0.4, 0.5, 0.1, 0.5, 0.8),
    5: (0.0, 0.5, 0.0, 0.5, 0.0),
    6: (0.0, 0.5, 0.1, 0.5, 0.0),
    7: (0.4, 0.5, 0.0, 0.5, 0.0),
    8: (0.4, 0.5, 0.1, 0.5, 0.0),
}


def _rows(dag: int) -> list[tuple[str, tuple[float, float, float, float, float], str]]:
    eta, thx, thv, bx, bv = _BASE[dag]
    rows = [("base", (eta, thx, thv, bx, bv), "normal")]
    rows.append(("small-rho-xzv", (eta, 0.2, thv, bx, bv), "normal"))
    rows.append(("small-beta-x", (eta, thx, thv, 0.1, bv), "normal"))
    if eta != 0.0:
        rows.append(("negative-rho-vx", (-eta, thx, thv, bx, bv), "normal"))
        rows.append(("small-rho-vx", (0.2, thx, thv, bx, bv), "normal"))
    if thv != 0.0:
        rows.append(("large-rho-vzx", (eta, thx, 2.0, bx, bv), "normal"))
    if bv != 0.0:
        rows.append(("weak-risk-v", (eta, thx, thv, bx, 0.2), "normal"))
    rows.append(("binary-v", (eta, thx, thv, bx, bv), "bernoulli"))
    return rows


def catalog() -> list[ScenarioConfig]:
    """Every simulation scenario, for both outcome families, plus size variants."""
    configs: list[ScenarioConfig] = []
    for outcome in ("continuous", "binary"):
        n_ms, n_vs = (4600, 400) if outcome == "continuous" else (9600, 400)
        small_main = 1600 if outcome == "continuous" else 4600
        large_main = 4850 if outcome == "continuous" else 9850
        for dag in range(1, 9):
            for slug, (eta, thx, thv, bx, bv), v_dist in _rows(dag):
                configs.append(
                    ScenarioConfig(
                        dag=DagId(dag),
                        eta_v=eta,
                        theta_x=thx,
                        theta_v=thv,
                        beta_x=bx,
                        beta_v=bv,
                        v_dist=v_dist,
                        outcome=outcome,
                        n_ms=n_ms,
                        n_vs=n_vs,
                        name=f"dag{dag}-{slug}-{outcome}",
                    )
                )
            base = next(c for c in configs if c.name == f"dag{dag}-base-{outcome}")
            configs.append(
                replace(base, n_ms=small_main, name=f"dag{dag}-base-small-main-{outcome}")
            )
            configs.append(
                replace(
                    base,
                    n_ms=large_main,
                    n_vs=150,
                    name=f"dag{dag}-base-small-validation-{outcome}",
                )
            )
    return configs
