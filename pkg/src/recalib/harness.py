"""Monte Carlo driver: percent bias, empirical variance, and efficiency ratios.

Each replicate draws one synthetic dataset, fits the component models once per
needed variant (adjusted/unadjusted outcome model on the main study,
adjusted/unadjusted calibration model on the validation study), and assembles
every requested strategy from those shared fits. Replicates use independent
RNG substreams and are reduced in index order, so results do not depend on the
worker schedule.
"""
from __future__ import annotations

import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import analytic, rsw, scenario
from .exceptions import (
    InvalidConfig,
    NearZeroCalibrationSlope,
    NonConvergence,
    Separation,
    TooManyFailures,
)
from .regress import Family, fit_logistic, fit_ols
from .strategies import AdjustmentStrategy

ALL_STRATEGIES = tuple(AdjustmentStrategy)
FAILURE_WARN_FRACTION = 0.01
FAILURE_ABORT_FRACTION = 0.10


@dataclass(frozen=True)
class StrategySummary:
    mean: float
    percent_bias: float
    mc_se: float
    empirical_variance: float
    ere: float | None
    analytic_variance: float | None
    are: float | None
    n_used: int
    failures: int


@dataclass(frozen=True)
class SimResult:
    scenario: str
    outcome: str
    truth: float
    replicates: int
    strategies: dict[str, StrategySummary]


def _replicate_betas(
    config: scenario.ScenarioConfig,
    replicate_index: int,
    strategies: tuple[AdjustmentStrategy, ...],
) -> dict[str, float | None]:
    """Corrected estimates for one replicate; None marks a failed fit."""
    sample = scenario.generate(config, replicate_index)
    main, valid = sample.main, sample.validation
    family = Family.LOGISTIC if config.outcome == "binary" else Family.LINEAR

    need_adj_outcome = any(
        s in (AdjustmentStrategy.OM, AdjustmentStrategy.O_NONE) for s in strategies
    )
    need_un_outcome = any(
        s in (AdjustmentStrategy.NONE_NONE, AdjustmentStrategy.NONE_M) for s in strategies
    )
    need_adj_mem = any(
        s in (AdjustmentStrategy.OM, AdjustmentStrategy.NONE_M) for s in strategies
    )
    need_un_mem = any(
        s in (AdjustmentStrategy.NONE_NONE, AdjustmentStrategy.O_NONE) for s in strategies
    )

    def outcome_fit(adjusted: bool):
        covs = [main.covariates["v"]] if adjusted else []
        X = np.column_stack([np.ones_like(main.z), main.z, *covs])
        try:
            return fit_logistic(main.y, X) if family is Family.LOGISTIC else fit_ols(main.y, X)
        except (Separation, NonConvergence):
            return None

    def mem_fit(adjusted: bool):
        covs = [valid.covariates["v"]] if adjusted else []
        X = np.column_stack([np.ones_like(valid.z), valid.z, *covs])
        return fit_ols(valid.x, X)

    fits_outcome = {
        True: outcome_fit(True) if need_adj_outcome else None,
        False: outcome_fit(False) if need_un_outcome else None,
    }
    fits_mem = {
        True: mem_fit(True) if need_adj_mem else None,
        False: mem_fit(False) if need_un_mem else None,
    }

    uses_adjusted = {
        AdjustmentStrategy.OM: (True, True),
        AdjustmentStrategy.NONE_NONE: (False, False),
        AdjustmentStrategy.NONE_M: (False, True),
        AdjustmentStrategy.O_NONE: (True, False),
    }
    out: dict[str, float | None] = {}
    for strategy in strategies:
        adj_o, adj_m = uses_adjusted[strategy]
        fo, fm = fits_outcome[adj_o], fits_mem[adj_m]
        if fo is None:
            out[strategy.value] = None
            continue
        try:
            out[strategy.value] = rsw.assemble_estimate(fo, fm, strategy).beta_hat
        except NearZeroCalibrationSlope:
            out[strategy.value] = None
    return out


def run_scenario(
    config: scenario.ScenarioConfig,
    strategies: tuple[AdjustmentStrategy, ...] = ALL_STRATEGIES,
    jobs: int = 1,
    progress: bool = False,
) -> SimResult:
    """Run all replicates of one scenario and summarize per strategy."""
    reps = config.replicates
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(
                    _replicate_betas,
                    [config] * reps,
                    range(reps),
                    [strategies] * reps,
                    chunksize=max(1, reps // (jobs * 8)),
                )
            )
    else:
        results = []
        for k in range(reps):
            results.append(_replicate_betas(config, k, strategies))
            if progress and (k + 1) % 100 == 0:
                print(f"{config.name or 'scenario'}: {k + 1}/{reps}", file=sys.stderr)

    params = None
    if config.outcome == "continuous":
        params = scenario.implied_correlations(config)

    betas = {
        s.value: np.array([r[s.value] for r in results if r[s.value] is not None])
        for s in strategies
    }
    failures = {s.value: sum(r[s.value] is None for r in results) for s in strategies}
    for tag, count in failures.items():
        if count > FAILURE_ABORT_FRACTION * reps:
            raise TooManyFailures(
                f"{config.name or 'scenario'}: {count}/{reps} replicates failed for {tag}"
            )
        if count > FAILURE_WARN_FRACTION * reps:
            warnings.warn(
                f"{config.name or 'scenario'}: {count}/{reps} replicates failed for {tag} "
                "and were excluded",
                stacklevel=2,
            )

    emp_var = {tag: float(np.var(b, ddof=1)) for tag, b in betas.items()}
    var_om = emp_var.get(AdjustmentStrategy.OM.value)
    summaries: dict[str, StrategySummary] = {}
    for s in strategies:
        tag = s.value
        b = betas[tag]
        mean = float(b.mean())
        avar = float(analytic.analytic_variance(params, s)) if params is not None else None
        summaries[tag] = StrategySummary(
            mean=mean,
            percent_bias=100.0 * (mean - config.beta_x) / config.beta_x,
            mc_se=float(np.sqrt(emp_var[tag] / b.size)),
            empirical_variance=emp_var[tag],
            ere=(var_om / emp_var[tag]) if var_om is not None else None,
            analytic_variance=avar,
            are=float(analytic.are(params, s)) if params is not None else None,
            n_used=int(b.size),
            failures=failures[tag],
        )
    return SimResult(
        scenario=config.name or f"dag{int(config.dag)}-{config.outcome}",
        outcome=config.outcome,
        truth=config.beta_x,
        replicates=reps,
        strategies=summaries,
    )


def run_catalog(
    name_filter: str | None = None,
    strategies: tuple[AdjustmentStrategy, ...] = ALL_STRATEGIES,
    replicates: int | None = None,
    seed: int | None = None,
    jobs: int = 1,
    progress: bool = False,
) -> list[SimResult]:
    """Run every catalog scenario whose name contains ``name_filter``."""
    configs = scenario.catalog()
    if name_filter:
        selected = [c for c in configs if name_filter in c.name]
        if not selected:
            names = ", ".join(c.name for c in configs)
            raise InvalidConfig(
                f"no catalog scenario matches {name_filter!r}; valid names: {names}"
            )
    else:
        selected = configs
    overrides = {}
    if replicates is not None:
        overrides["replicates"] = replicates
    if seed is not None:
        overrides["seed"] = seed
    results = []
    for config in selected:
        if overrides:
            config = replace(config, **overrides)
        results.append(run_scenario(config, strategies=strategies, jobs=jobs, progress=progress))
    return results


def _format_cell(value: float | None, scale: float = 1.0, digits: int = 2) -> str:
    if value is None:
        return "NA"
    return f"{value * scale:.{digits}f}"


def summary_table(results: list[SimResult], format: str = "csv") -> str:
    """Long-format summary; variances reported in units of 1e-3."""
    header = ["scenario", "strategy", "bias_pct", "emp_var_x1e3", "ere", "analytic_var_x1e3", "are"]
    rows = []
    for result in results:
        for tag, s in result.strategies.items():
            rows.append(
                [
                    result.scenario,
                    tag,
                    f"{s.percent_bias:.0f}",
                    _format_cell(s.empirical_variance, 1e3),
                    _format_cell(s.ere),
                    _format_cell(s.analytic_variance, 1e3),
                    _format_cell(s.are),
                ]
            )
    if format == "csv":
        lines = [",".join(header)] + [",".join(r) for r in rows]
        return "\n".join(lines) + "\n"
    if format == "markdown":
        lines = [
            "| " + " | ".join(header) + " |",
            "|" + "|".join("---" for _ in header) + "|",
        ]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise InvalidConfig(f"unknown table format {format!r}")
