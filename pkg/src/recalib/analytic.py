"""Closed-form asymptotics for the four calibration estimators.

Everything here is exact algebra on a jointly Gaussian (X, Z, V, Y) population:
population regression slopes, their large-sample sampling variances, the
delta-method variance of each corrected estimator, probability limits of the
mis-adjusted estimators, and relative-efficiency grids over (conditional)
correlation coordinates.

Notation: unstarred slopes (gamma1, alpha1) come from the V-adjusted outcome
and calibration models, starred ones (gamma1_star, alpha1_star) from the
unadjusted models. The corrected estimator under each adjustment strategy is a
ratio of one outcome slope over one calibration slope:

    OM        gamma1 / alpha1           V in both models
    NoneNone  gamma1* / alpha1*         V in neither
    NoneM     gamma1* / alpha1          V in the calibration model only
    ONone     gamma1 / alpha1*          V in the outcome model only

The sampling-variance expressions assume the outcome model is fit on n_ms
observations and the calibration model on an independent (external) validation
sample of n_vs observations, so the two slope estimates are uncorrelated and
the delta-method variance has no covariance term.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

from .exceptions import InconsistentCorrelations, ZeroSlope
from .strategies import AdjustmentStrategy

FEASIBILITY_TOL = 1e-12

#: Conditional-correlation coordinates that are structurally zero under each
#: covariate structure (keys are the DAG/V-type index 1..8). The five
#: coordinates are rho_vx, rho_xz_v, rho_vz_x, rho_vy_x, rho_xy_v; only the
#: ones forced to zero are listed.
DAG_ZERO_CONSTRAINTS: dict[int, tuple[str, ...]] = {
    1: ("rho_vx", "rho_vz_x"),
    2: ("rho_vx",),
    3: ("rho_vz_x",),
    4: (),
    5: ("rho_vx", "rho_vz_x", "rho_vy_x"),
    6: ("rho_vx", "rho_vy_x"),
    7: ("rho_vz_x", "rho_vy_x"),
    8: ("rho_vy_x",),
}

#: Strategies whose probability limit equals the causal slope under each
#: structure (continuous outcome, linear models).
DAG_VALID_STRATEGIES: dict[int, tuple[AdjustmentStrategy, ...]] = {
    1: tuple(AdjustmentStrategy),
    2: (AdjustmentStrategy.OM,),
    3: (AdjustmentStrategy.OM,),
    4: (AdjustmentStrategy.OM,),
    5: tuple(AdjustmentStrategy),
    6: (AdjustmentStrategy.OM, AdjustmentStrategy.NONE_NONE),
    7: (AdjustmentStrategy.OM, AdjustmentStrategy.NONE_NONE),
    8: (AdjustmentStrategy.OM, AdjustmentStrategy.NONE_NONE),
}

CONDITIONAL_NAMES = ("rho_vx", "rho_xz_v", "rho_vz_x", "rho_vy_x", "rho_xy_v")


def _det3(r_ab: float, r_ac: float, r_bc: float) -> float:
    """Determinant of the 3x3 correlation matrix with the given off-diagonals."""
    return 1.0 + 2.0 * r_ab * r_ac * r_bc - r_ab**2 - r_ac**2 - r_bc**2


@dataclass(frozen=True)
class PopulationParams:
    """Marginal correlations and scales of (X, Z, V, Y) plus sample sizes."""

    rho_xz: float
    rho_vx: float
    rho_vz: float
    rho_yz: float
    rho_vy: float
    sigma_x: float
    sigma_y: float
    sigma_z: float
    n_ms: int
    n_vs: int

    def __post_init__(self):
        for name in ("rho_xz", "rho_vx", "rho_vz", "rho_yz", "rho_vy"):
            if not -1.0 < getattr(self, name) < 1.0:
                raise InconsistentCorrelations(f"{name} must lie in (-1, 1)")
        for name in ("sigma_x", "sigma_y", "sigma_z"):
            if getattr(self, name) <= 0:
                raise InconsistentCorrelations(f"{name} must be positive")
        if self.n_ms <= 0 or self.n_vs <= 0:
            raise InconsistentCorrelations("sample sizes must be positive")
        if _det3(self.rho_xz, self.rho_vx, self.rho_vz) <= FEASIBILITY_TOL:
            raise InconsistentCorrelations("(X, Z, V) correlations are not positive definite")
        if _det3(self.rho_yz, self.rho_vy, self.rho_vz) <= FEASIBILITY_TOL:
            raise InconsistentCorrelations("(Y, Z, V) correlations are not positive definite")


@dataclass(frozen=True)
class AnalyticLimits:
    """Population slopes and the probability limits of the four estimators.

    lambda1 is the slope of E[V|Z]; gamma2 and alpha2 are the V-coefficients of
    the adjusted models. The three of them are reported under a sigma_V = 1
    convention (only the products gamma2*lambda1 and alpha2*lambda1 are
    identified from correlations, and every derived quantity below depends on
    them only through those products).
    """

    gamma1: float
    gamma1_star: float
    alpha1: float
    alpha1_star: float
    lambda1: float
    gamma2: float
    alpha2: float
    beta_prime_nn: float
    beta_prime_nm: float
    beta_prime_on: float

    @property
    def beta(self) -> float:
        """The causal slope gamma1/alpha1 (limit of the OM estimator)."""
        return self.gamma1 / self.alpha1

    def limit(self, strategy: AdjustmentStrategy) -> float:
        return {
            AdjustmentStrategy.OM: self.beta,
            AdjustmentStrategy.NONE_NONE: self.beta_prime_nn,
            AdjustmentStrategy.NONE_M: self.beta_prime_nm,
            AdjustmentStrategy.O_NONE: self.beta_prime_on,
        }[strategy]


def partial_correlation(rho_ab: float, rho_ac: float, rho_bc: float) -> float:
    """Correlation of A and B given C, for jointly Gaussian variables."""
    if not (abs(rho_ac) < 1.0 and abs(rho_bc) < 1.0):
        raise InconsistentCorrelations("conditioning correlations must lie in (-1, 1)")
    out = (rho_ab - rho_ac * rho_bc) / math.sqrt((1.0 - rho_ac**2) * (1.0 - rho_bc**2))
    if abs(out) > 1.0:
        raise InconsistentCorrelations(
            f"inputs imply |partial correlation| = {abs(out):.4f} > 1"
        )
    return out


def marginal_correlation(rho_ab_c: float, rho_ac: float, rho_bc: float) -> float:
    """Invert :func:`partial_correlation` for the marginal rho_AB."""
    if not (abs(rho_ac) < 1.0 and abs(rho_bc) < 1.0):
        raise InconsistentCorrelations("conditioning correlations must lie in (-1, 1)")
    return rho_ab_c * math.sqrt((1.0 - rho_ac**2) * (1.0 - rho_bc**2)) + rho_ac * rho_bc


def population_coefficients(p: PopulationParams) -> AnalyticLimits:
    """Population regression slopes and the four probability limits."""
    d = 1.0 - p.rho_vz**2
    gamma1_star = p.rho_yz * p.sigma_y / p.sigma_z
    alpha1_star = p.rho_xz * p.sigma_x / p.sigma_z
    gamma1 = (p.rho_yz - p.rho_vy * p.rho_vz) * p.sigma_y / (d * p.sigma_z)
    alpha1 = (p.rho_xz - p.rho_vx * p.rho_vz) * p.sigma_x / (d * p.sigma_z)
    # sigma_V = 1 convention; see the class docstring.
    lambda1 = p.rho_vz / p.sigma_z
    gamma2 = (p.rho_vy - p.rho_yz * p.rho_vz) * p.sigma_y / d
    alpha2 = (p.rho_vx - p.rho_xz * p.rho_vz) * p.sigma_x / d

    if alpha1 == 0.0 or alpha1_star == 0.0:
        raise ZeroSlope("population calibration slope is zero")
    return AnalyticLimits(
        gamma1=gamma1,
        gamma1_star=gamma1_star,
        alpha1=alpha1,
        alpha1_star=alpha1_star,
        lambda1=lambda1,
        gamma2=gamma2,
        alpha2=alpha2,
        beta_prime_nn=gamma1_star / alpha1_star,
        beta_prime_nm=gamma1_star / alpha1,
        beta_prime_on=gamma1 / alpha1_star,
    )


def _slope_variances(p: PopulationParams) -> dict[str, float]:
    """Large-sample variances of the four slope estimators."""
    d = 1.0 - p.rho_vz**2
    var_gamma1_star = (1.0 - p.rho_yz**2) * p.sigma_y**2 / (p.n_ms * p.sigma_z**2)
    var_alpha1_star = (1.0 - p.rho_xz**2) * p.sigma_x**2 / (p.n_vs * p.sigma_z**2)
    var_gamma1 = (
        p.sigma_y**2
        * (1.0 - p.rho_vy**2 - p.rho_vz**2 - p.rho_yz**2 + 2.0 * p.rho_vy * p.rho_vz * p.rho_yz)
        / (p.n_ms * p.sigma_z**2 * d**2)
    )
    var_alpha1 = (
        p.sigma_x**2
        * (1.0 - p.rho_vx**2 - p.rho_vz**2 - p.rho_xz**2 + 2.0 * p.rho_vx * p.rho_vz * p.rho_xz)
        / (p.n_vs * p.sigma_z**2 * d**2)
    )
    return {
        "gamma1": var_gamma1,
        "gamma1_star": var_gamma1_star,
        "alpha1": var_alpha1,
        "alpha1_star": var_alpha1_star,
    }


_STRATEGY_COMPONENTS = {
    AdjustmentStrategy.OM: ("gamma1", "alpha1"),
    AdjustmentStrategy.NONE_NONE: ("gamma1_star", "alpha1_star"),
    AdjustmentStrategy.NONE_M: ("gamma1_star", "alpha1"),
    AdjustmentStrategy.O_NONE: ("gamma1", "alpha1_star"),
}


def analytic_variance(p: PopulationParams, strategy: AdjustmentStrategy) -> float:
    """Delta-method asymptotic variance of the chosen estimator."""
    limits = population_coefficients(p)
    variances = _slope_variances(p)
    g_name, a_name = _STRATEGY_COMPONENTS[strategy]
    gamma = getattr(limits, g_name)
    alpha = getattr(limits, a_name)
    if alpha == 0.0:
        raise ZeroSlope("calibration slope is zero for this strategy")
    return variances[g_name] / alpha**2 + gamma**2 * variances[a_name] / alpha**4


def are(p: PopulationParams, strategy: AdjustmentStrategy) -> float:
    """Asymptotic relative efficiency Var(OM) / Var(strategy)."""
    if strategy is AdjustmentStrategy.OM:
        return 1.0
    return analytic_variance(p, AdjustmentStrategy.OM) / analytic_variance(p, strategy)


def conditionals_from_params(p: PopulationParams) -> dict[str, float]:
    """Conditional-correlation coordinates implied by marginal params.

    rho_XY is not carried by :class:`PopulationParams`; it is recovered from
    the surrogacy identity rho_YZ|V = rho_XY|V * rho_XZ|V, which holds for
    every population this package models (Y is independent of Z given X, V).
    """
    rho_xz_v = partial_correlation(p.rho_xz, p.rho_vx, p.rho_vz)
    rho_yz_v = partial_correlation(p.rho_yz, p.rho_vy, p.rho_vz)
    if rho_xz_v == 0.0:
        raise InconsistentCorrelations("rho_XZ|V = 0: exposure and surrogate unrelated")
    rho_xy_v = rho_yz_v / rho_xz_v
    if abs(rho_xy_v) >= 1.0:
        raise InconsistentCorrelations("surrogacy-implied rho_XY|V falls outside (-1, 1)")
    rho_xy = marginal_correlation(rho_xy_v, p.rho_vx, p.rho_vy)
    rho_vy_x = partial_correlation(p.rho_vy, p.rho_vx, rho_xy)
    rho_vz_x = partial_correlation(p.rho_vz, p.rho_vx, p.rho_xz)
    return {
        "rho_vx": p.rho_vx,
        "rho_xz_v": rho_xz_v,
        "rho_vz_x": rho_vz_x,
        "rho_vy_x": rho_vy_x,
        "rho_xy_v": rho_xy_v,
    }


def params_from_conditionals(
    cond: dict[str, float],
    sigma_x: float = 1.0,
    sigma_y: float = 1.0,
    sigma_z: float = 1.0,
    n_ms: int = 5000,
    n_vs: int = 400,
    max_iter: int = 500,
    tol: float = 1e-13,
) -> PopulationParams:
    """Solve conditional coordinates back to marginal correlations.

    The five coordinates (rho_vx, rho_xz_v, rho_vz_x, rho_vy_x, rho_xy_v) plus
    the surrogacy constraint rho_YZ|XV = 0 pin down the five marginals
    (rho_xz, rho_vz, rho_vy, rho_xy, rho_yz) given rho_vx. Solved by damped
    fixed-point iteration on the partial-correlation identities.
    """
    unknown = set(cond) - set(CONDITIONAL_NAMES)
    if unknown:
        raise InconsistentCorrelations(f"unknown conditional coordinate(s): {sorted(unknown)}")
    c = {name: float(cond.get(name, 0.0)) for name in CONDITIONAL_NAMES}
    for name, value in c.items():
        if not -1.0 < value < 1.0:
            raise InconsistentCorrelations(f"{name} must lie in (-1, 1)")

    r_vx = c["rho_vx"]
    # start from the conditionals themselves
    r_xz, r_vz, r_xy, r_vy = c["rho_xz_v"], c["rho_vz_x"], c["rho_xy_v"], c["rho_vy_x"]
    r_yz = c["rho_xy_v"] * c["rho_xz_v"]

    def clip(v: float) -> float:
        return max(-0.999999, min(0.999999, v))

    converged = False
    for _ in range(max_iter):
        n_xz = clip(marginal_correlation(c["rho_xz_v"], r_vx, r_vz))
        n_vz = clip(marginal_correlation(c["rho_vz_x"], r_vx, n_xz))
        n_xy = clip(marginal_correlation(c["rho_xy_v"], r_vx, r_vy))
        n_vy = clip(marginal_correlation(c["rho_vy_x"], r_vx, n_xy))
        rho_yz_v = c["rho_xy_v"] * c["rho_xz_v"]  # surrogacy: rho_YZ|V = rho_XY|V rho_XZ|V
        n_yz = clip(marginal_correlation(rho_yz_v, n_vy, n_vz))
        delta = max(
            abs(n_xz - r_xz), abs(n_vz - r_vz), abs(n_xy - r_xy), abs(n_vy - r_vy), abs(n_yz - r_yz)
        )
        r_xz, r_vz, r_xy, r_vy, r_yz = n_xz, n_vz, n_xy, n_vy, n_yz
        if delta < tol:
            converged = True
            break
    if not converged:
        raise InconsistentCorrelations("conditional coordinates did not yield stable marginals")

    p = PopulationParams(
        rho_xz=r_xz,
        rho_vx=r_vx,
        rho_vz=r_vz,
        rho_yz=r_yz,
        rho_vy=r_vy,
        sigma_x=sigma_x,
        sigma_y=sigma_y,
        sigma_z=sigma_z,
        n_ms=n_ms,
        n_vs=n_vs,
    )  # raises InconsistentCorrelations if infeasible
    # confirm the round trip, guarding against spurious fixed points
    back = conditionals_from_params(p)
    for name in CONDITIONAL_NAMES:
        if abs(back[name] - c[name]) > 1e-8:
            raise InconsistentCorrelations(
                f"no feasible correlation structure reproduces {name} = {c[name]}"
            )
    return p


def are_grid(
    dag: int,
    sweeps: list[dict],
    fixed: PopulationParams,
) -> list[dict]:
    """Evaluate variance and relative efficiency over a conditional-coordinate grid.

    ``sweeps`` holds one or two entries of the form
    ``{"param": <conditional name>, "values": [...]}``. Remaining coordinates
    come from ``fixed`` (converted to conditionals), after which the
    structure's zero constraints are imposed. Infeasible cells are reported
    with ``feasible=False`` and None results rather than raising.
    """
    if dag not in DAG_ZERO_CONSTRAINTS:
        raise InconsistentCorrelations(f"unknown DAG index {dag}")
    if not 1 <= len(sweeps) <= 2:
        raise InconsistentCorrelations("provide one or two swept parameters")
    for s in sweeps:
        if s["param"] not in CONDITIONAL_NAMES:
            raise InconsistentCorrelations(f"cannot sweep unknown coordinate {s['param']!r}")
        if s["param"] in DAG_ZERO_CONSTRAINTS[dag]:
            raise InconsistentCorrelations(
                f"{s['param']} is structurally zero under DAG {dag}"
            )

    base = conditionals_from_params(fixed)
    for name in DAG_ZERO_CONSTRAINTS[dag]:
        base[name] = 0.0

    rows: list[dict] = []
    names = [s["param"] for s in sweeps]
    for values in itertools.product(*(s["values"] for s in sweeps)):
        cond = dict(base)
        cond.update(dict(zip(names, values)))
        coords = dict(zip(names, values))
        try:
            p = params_from_conditionals(
                cond,
                sigma_x=fixed.sigma_x,
                sigma_y=fixed.sigma_y,
                sigma_z=fixed.sigma_z,
                n_ms=fixed.n_ms,
                n_vs=fixed.n_vs,
            )
        except InconsistentCorrelations:
            for strategy in DAG_VALID_STRATEGIES[dag]:
                rows.append(
                    {
                        "dag": dag,
                        **coords,
                        "strategy": strategy.value,
                        "variance": None,
                        "are": None,
                        "feasible": False,
                    }
                )
            continue
        var_om = analytic_variance(p, AdjustmentStrategy.OM)
        for strategy in DAG_VALID_STRATEGIES[dag]:
            var_s = analytic_variance(p, strategy)
            rows.append(
                {
                    "dag": dag,
                    **coords,
                    "strategy": strategy.value,
                    "variance": var_s,
                    "are": var_om / var_s,
                    "feasible": True,
                }
            )
    return rows


def with_sample_sizes(p: PopulationParams, n_ms: int, n_vs: int) -> PopulationParams:
    """Same population, different formula sample sizes."""
    return replace(p, n_ms=n_ms, n_vs=n_vs)
