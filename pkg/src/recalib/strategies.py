"""Covariate adjustment strategies shared by the estimator and analytic layers."""
from enum import Enum


class AdjustmentStrategy(Enum):
    """Which of the two component models adjusts for the covariate(s).

    OM: both models; NoneNone: neither; NoneM: calibration model only;
    ONone: outcome model only.
    """

    OM = "OM"
    NONE_NONE = "NoneNone"
    NONE_M = "NoneM"
    O_NONE = "ONone"

    @classmethod
    def from_tag(cls, tag: str) -> "AdjustmentStrategy":
        for member in cls:
            if member.value == tag:
                return member
        raise ValueError(f"unknown strategy tag {tag!r}; expected one of "
                         f"{', '.join(m.value for m in cls)}")
