"""Command-line front end: estimate, simulate, are-grid, advise."""
from __future__ import annotations

import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import click
import numpy as np

from . import advisor, analytic, harness, rsw, scenario
from .data import Dataset, load_main_csv, load_validation_csv
from .exceptions import RecalibError, SchemaError
from .regress import Family
from .strategies import AdjustmentStrategy

ENV_SEED = "RECAL_SEED"


def _default_seed() -> int | None:
    raw = os.environ.get(ENV_SEED)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise SchemaError(f"{ENV_SEED} must be an integer, got {raw!r}") from exc


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"{path}: invalid TOML: {exc}") from exc


def _parse_roles_section(section: dict) -> list[advisor.CovariateRole]:
    roles = []
    for name, decl in section.items():
        if isinstance(decl, str):
            roles.append(advisor.role_from_label(name, decl))
        elif isinstance(decl, dict):
            roles.append(
                advisor.role_from_label(
                    name,
                    decl.get("class", ""),
                    available_in_validation=bool(decl.get("in_validation", True)),
                )
            )
        else:
            raise SchemaError(f"role for {name!r} must be a class string or a table")
    return roles


def _covariate_sets(advice: advisor.Advice, roles: list[advisor.CovariateRole]):
    """Outcome-model and calibration-model covariate sets for the recommended fit."""
    available = {r.name: r.available_in_validation for r in roles}
    outcome_set: list[str] = []
    mem_set: list[str] = []
    for name, cov_advice in advice.per_covariate.items():
        if cov_advice.recommended == "OM":
            outcome_set.append(name)
            mem_set.append(name)
        elif cov_advice.recommended == "ONone":
            outcome_set.append(name)
        # NoneNone covariates stay out of both models
        if name in mem_set and not available[name]:
            mem_set.remove(name)
    return outcome_set, mem_set


def _forced_sets(strategy: AdjustmentStrategy, outcome_set, mem_set):
    if strategy is AdjustmentStrategy.OM:
        return outcome_set, mem_set
    if strategy is AdjustmentStrategy.NONE_NONE:
        return [], []
    if strategy is AdjustmentStrategy.NONE_M:
        return [], mem_set
    return outcome_set, []


def _format_estimate(label: str, est: rsw.RswEstimate, unit: float) -> list[str]:
    lines = [
        f"{label}: strategy {est.strategy.value}",
        f"  beta_hat = {est.beta_hat:.6f}  se = {est.se:.6f}  "
        f"95% CI [{est.ci_low:.6f}, {est.ci_high:.6f}]",
    ]
    if est.outcome_family is Family.LOGISTIC:
        lines.append(
            f"  OR per {unit:g} unit(s) of exposure = {np.exp(est.beta_hat * unit):.4f}  "
            f"95% CI [{np.exp(est.ci_low * unit):.4f}, {np.exp(est.ci_high * unit):.4f}]"
        )
    return lines


def cmd_estimate(main_path: str, validation_path: str, config_path: str) -> str:
    """Corrected-estimate workflow over a pair of CSV files."""
    config = _load_toml(config_path)
    columns = config.get("columns", {})
    for key in ("z", "y", "x"):
        if key not in columns:
            raise SchemaError(f"{config_path}: [columns] must map '{key}' to a CSV column")
    outcome_cfg = config.get("outcome", {})
    family_name = outcome_cfg.get("family", "linear")
    if family_name not in ("linear", "logistic"):
        raise SchemaError(f"{config_path}: outcome family must be 'linear' or 'logistic'")
    family = Family.LOGISTIC if family_name == "logistic" else Family.LINEAR
    unit = float(outcome_cfg.get("exposure_unit", 1.0))

    roles = _parse_roles_section(config.get("roles", {}))
    covariate_cols = {r.name: config.get("columns", {}).get(r.name, r.name) for r in roles}
    main = load_main_csv(main_path, columns["z"], columns["y"], covariate_cols)
    validation_cols = {
        r.name: covariate_cols[r.name] for r in roles if r.available_in_validation
    }
    valid = load_validation_csv(validation_path, columns["x"], columns["z"], validation_cols)
    dataset = Dataset(main=main, validation=valid, roles={r.name: r.label for r in roles})

    advice = advisor.advise(roles, outcome_family=family_name)
    outcome_set, mem_set = _covariate_sets(advice, roles)

    lines = ["covariate guidance:"]
    lines.append(f"  minimal adjustment set: {', '.join(advice.minimal_set) or '(empty)'}")
    for name, cov_advice in advice.per_covariate.items():
        lines.append(
            f"  {name} ({cov_advice.label}): recommended {cov_advice.recommended} — "
            f"{cov_advice.rationale}"
        )
    for warning in advice.warnings:
        lines.append(f"  warning: {warning}")

    est = rsw.estimate(
        dataset.main,
        dataset.validation,
        covariates_outcome=outcome_set,
        covariates_mem=mem_set,
        outcome_family=family,
    )
    lines.append("")
    lines += _format_estimate("corrected estimate", est, unit)
    lines.append(
        f"  outcome-model covariates: {', '.join(outcome_set) or '(none)'}; "
        f"calibration-model covariates: {', '.join(mem_set) or '(none)'}"
    )

    naive_fit = rsw.fit_outcome_model(dataset.main, outcome_set, family)
    naive = float(naive_fit.coefficients[1])
    lines.append(
        f"naive (uncorrected) estimate: {naive:.6f}  se = {naive_fit.se(1):.6f}"
    )

    prevalence = float(dataset.main.y.mean()) if family is Family.LOGISTIC else None
    mem_fit = rsw.fit_calibration_model(dataset.validation, mem_set)
    diag = rsw.small_me_diagnostic(mem_fit, est.beta_hat, outcome_prevalence=prevalence)
    lines.append(
        f"small measurement error statistic var(X|Z,V)*beta^2 = {diag['stat']:.4f}"
        + ("  WARNING: approximation may be poor" if diag["warn"] else "")
    )

    for tag in config.get("estimate", {}).get("force_strategies", []):
        strategy = AdjustmentStrategy.from_tag(tag)
        f_out, f_mem = _forced_sets(strategy, outcome_set, mem_set)
        forced = rsw.estimate(
            dataset.main,
            dataset.validation,
            covariates_outcome=f_out,
            covariates_mem=f_mem,
            outcome_family=family,
        )
        lines.append("")
        lines += _format_estimate(f"forced strategy {tag}", forced, unit)
        biased_for = [
            name
            for name, cov_advice in advice.per_covariate.items()
            if cov_advice.validity[tag] == "biased"
        ]
        if biased_for:
            lines.append(
                f"  WARNING: {tag} is biased given declared role(s) of "
                f"{', '.join(biased_for)}"
            )
    return "\n".join(lines) + "\n"


def cmd_simulate(
    config_path: str | None,
    catalog_filter: str | None,
    seed: int | None,
    replicates: int | None,
    jobs: int,
    format: str,
) -> str:
    if (config_path is None) == (catalog_filter is None):
        raise SchemaError("provide exactly one of a scenario config file or --catalog")
    if seed is None:
        seed = _default_seed()
    if catalog_filter is not None:
        results = harness.run_catalog(
            catalog_filter, replicates=replicates, seed=seed, jobs=jobs
        )
    else:
        raw = _load_toml(config_path)
        raw.setdefault("name", "custom")
        if "dag" not in raw:
            raise SchemaError(f"{config_path}: scenario config needs a 'dag' key")
        raw["dag"] = scenario.DagId(int(raw["dag"]))
        if seed is not None:
            raw["seed"] = seed
        if replicates is not None:
            raw["replicates"] = replicates
        config = scenario.ScenarioConfig(**raw)
        results = [harness.run_scenario(config, jobs=jobs)]
    return harness.summary_table(results, format=format)


def cmd_are_grid(
    dag: int,
    sweeps: list[dict],
    fixed_conditionals: dict[str, float],
    n_ms: int,
    n_vs: int,
) -> str:
    base = {
        "rho_vx": 0.37,
        "rho_xz_v": 0.71,
        "rho_vz_x": 0.18,
        "rho_vy_x": 0.6,
        "rho_xy_v": 0.45,
    }
    for name in analytic.DAG_ZERO_CONSTRAINTS[dag]:
        base[name] = 0.0
    base.update(fixed_conditionals)
    if not sweeps:
        sweeps = _default_sweeps(dag)
    fixed = analytic.params_from_conditionals(base, n_ms=n_ms, n_vs=n_vs)
    rows = analytic.are_grid(dag, sweeps, fixed)
    names = [s["param"] for s in sweeps]
    header = ["dag", *names, "strategy", "variance", "are"]
    lines = [",".join(header)]
    for row in rows:
        cells = [str(row["dag"])]
        cells += [f"{row[n]:.6g}" for n in names]
        cells.append(row["strategy"])
        cells.append("NA" if row["variance"] is None else f"{row['variance']:.6e}")
        cells.append("NA" if row["are"] is None else f"{row['are']:.4f}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _default_sweeps(dag: int) -> list[dict]:
    values = [round(0.1 * k, 1) for k in range(0, 10)]
    free = {
        1: "rho_vy_x",
        2: "rho_vz_x",
        3: "rho_vx",
        4: "rho_vz_x",
        5: "rho_xy_v",
        6: "rho_vz_x",
        7: "rho_vx",
        8: "rho_vz_x",
    }[dag]
    return [{"param": free, "values": values}]


def cmd_advise(roles_path: str) -> str:
    roles = []
    try:
        with open(roles_path, encoding="utf-8") as handle:
            raw_lines = handle.readlines()
    except OSError as exc:
        raise SchemaError(f"{roles_path}: {exc}") from exc
    for lineno, raw in enumerate(raw_lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{roles_path}:{lineno}: expected 'name=V<1-8>', got {line!r}")
        name, _, rest = line.partition("=")
        parts = [p.strip() for p in rest.split(",")]
        label = parts[0]
        available = True
        for flag in parts[1:]:
            if flag == "no-validation":
                available = False
            else:
                raise SchemaError(f"{roles_path}:{lineno}: unknown flag {flag!r}")
        try:
            roles.append(advisor.role_from_label(name.strip(), label, available))
        except RecalibError as exc:
            raise SchemaError(f"{roles_path}:{lineno}: {exc}") from exc

    advice = advisor.advise(roles)
    if not advice.per_covariate:
        return "no covariates declared; nothing to advise\n"
    lines = [f"minimal adjustment set: {', '.join(advice.minimal_set) or '(empty)'}"]
    for name, cov_advice in advice.per_covariate.items():
        lines.append(f"{name} ({cov_advice.label}): recommended {cov_advice.recommended}")
        lines.append(f"  rationale: {cov_advice.rationale}")
        validity = "  ".join(f"{k}={v}" for k, v in cov_advice.validity.items())
        lines.append(f"  validity: {validity}")
    for warning in advice.warnings:
        lines.append(f"warning: {warning}")
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        click.echo(text, nl=False)


@click.group()
def main() -> None:
    """Measurement-error correction via regression calibration."""


@main.command("estimate")
@click.option("--main", "main_path", required=True, type=click.Path(exists=True))
@click.option("--validation", "validation_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path())
def estimate_command(main_path, validation_path, config_path, out):
    """Corrected exposure-outcome estimate from main/validation CSVs."""
    try:
        _emit(cmd_estimate(main_path, validation_path, config_path), out)
    except RecalibError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command("simulate")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--catalog", "catalog_filter", default=None)
@click.option("--seed", default=None, type=int)
@click.option("--replicates", default=None, type=int)
@click.option("--jobs", default=1, type=int)
@click.option("--format", "format_", default="csv", type=click.Choice(["csv", "markdown"]))
@click.option("--out", default=None, type=click.Path())
def simulate_command(config_path, catalog_filter, seed, replicates, jobs, format_, out):
    """Run simulation scenarios and print a summary table."""
    try:
        _emit(cmd_simulate(config_path, catalog_filter, seed, replicates, jobs, format_), out)
    except RecalibError as exc:
        raise click.ClickException(str(exc)) from exc


def _parse_sweep(spec: str) -> dict:
    name, _, values_spec = spec.partition("=")
    if not values_spec:
        raise SchemaError(f"sweep {spec!r}: expected name=v1,v2,... or name=lo:hi:n")
    if ":" in values_spec:
        parts = values_spec.split(":")
        if len(parts) != 3:
            raise SchemaError(f"sweep {spec!r}: range form is lo:hi:n")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        values = list(np.linspace(lo, hi, count))
    else:
        values = [float(v) for v in values_spec.split(",")]
    return {"param": name.strip(), "values": values}


@main.command("are-grid")
@click.option("--dag", required=True, type=click.IntRange(1, 8))
@click.option("--sweep", "sweep_specs", multiple=True, help="name=v1,v2,... or name=lo:hi:n")
@click.option("--fixed", "fixed_specs", multiple=True, help="name=value")
@click.option("--n-ms", default=5000, type=int)
@click.option("--n-vs", default=400, type=int)
@click.option("--out", default=None, type=click.Path())
def are_grid_command(dag, sweep_specs, fixed_specs, n_ms, n_vs, out):
    """Asymptotic relative-efficiency grid as CSV."""
    try:
        sweeps = [_parse_sweep(s) for s in sweep_specs]
        fixed = {}
        for spec in fixed_specs:
            name, _, value = spec.partition("=")
            if not value:
                raise SchemaError(f"fixed {spec!r}: expected name=value")
            fixed[name.strip()] = float(value)
        _emit(cmd_are_grid(dag, sweeps, fixed, n_ms, n_vs), out)
    except RecalibError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command("advise")
@click.argument("roles_file", type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path())
def advise_command(roles_file, out):
    """Covariate guidance from a role declaration file (name=V<1-8> per line)."""
    try:
        _emit(cmd_advise(roles_file), out)
    except RecalibError as exc:
        raise click.ClickException(str(exc)) from exc


if __name__ == "__main__":
    main(sys.argv[1:])
