"""Sample containers and CSV ingestion.

The main study observes (Z, covariates, Y); the validation study observes
(X, Z, covariates) and never Y. Covariates are stored by name so estimators
can pick per-model subsets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .exceptions import SchemaError


@dataclass(frozen=True)
class MainSample:
    z: np.ndarray
    y: np.ndarray
    covariates: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = self.z.shape[0]
        if self.y.shape[0] != n or any(v.shape[0] != n for v in self.covariates.values()):
            raise SchemaError("main-study columns have unequal lengths")

    @property
    def n(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True)
class ValidationSample:
    x: np.ndarray
    z: np.ndarray
    covariates: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = self.z.shape[0]
        if self.x.shape[0] != n or any(v.shape[0] != n for v in self.covariates.values()):
            raise SchemaError("validation-study columns have unequal lengths")

    @property
    def n(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True)
class Dataset:
    """A paired main/validation dataset plus declared covariate roles."""

    main: MainSample
    validation: ValidationSample
    roles: dict[str, str] = field(default_factory=dict)  # covariate name -> V1..V8


def _read_csv(path: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if frame.columns.duplicated().any():
        raise SchemaError(f"{path}: duplicate column names")
    return frame


def _require(frame: pd.DataFrame, path: str, columns: list[str]) -> None:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")


def _reject_missing(frame: pd.DataFrame, path: str, columns: list[str]) -> None:
    bad = frame[columns].isna().any(axis=1)
    if bad.any():
        # +2: header line plus 1-based numbering
        rows = [str(i + 2) for i in frame.index[bad][:20]]
        raise SchemaError(
            f"{path}: missing values in rows {', '.join(rows)}"
            f"{' (truncated)' if bad.sum() > 20 else ''}; complete cases required"
        )


def load_main_csv(path: str, z_col: str, y_col: str, covariate_cols: dict[str, str]) -> MainSample:
    """Read the main-study table; ``covariate_cols`` maps canonical name -> CSV column."""
    frame = _read_csv(path)
    needed = [z_col, y_col, *covariate_cols.values()]
    _require(frame, path, needed)
    _reject_missing(frame, path, needed)
    return MainSample(
        z=frame[z_col].to_numpy(dtype=float),
        y=frame[y_col].to_numpy(dtype=float),
        covariates={name: frame[col].to_numpy(dtype=float) for name, col in covariate_cols.items()},
    )


def load_validation_csv(
    path: str, x_col: str, z_col: str, covariate_cols: dict[str, str]
) -> ValidationSample:
    frame = _read_csv(path)
    needed = [x_col, z_col, *covariate_cols.values()]
    _require(frame, path, needed)
    _reject_missing(frame, path, needed)
    return ValidationSample(
        x=frame[x_col].to_numpy(dtype=float),
        z=frame[z_col].to_numpy(dtype=float),
        covariates={name: frame[col].to_numpy(dtype=float) for name, col in covariate_cols.items()},
    )


def write_main_csv(sample: MainSample, path: str) -> None:
    pd.DataFrame({"z": sample.z, "y": sample.y, **sample.covariates}).to_csv(path, index=False)


def write_validation_csv(sample: ValidationSample, path: str) -> None:
    pd.DataFrame({"x": sample.x, "z": sample.z, **sample.covariates}).to_csv(path, index=False)
