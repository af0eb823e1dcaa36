"""Exception hierarchy shared across the package."""


class RecalibError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(RecalibError):
    """Design matrix and response have incompatible shapes."""


class RankDeficient(RecalibError):
    """Design matrix is (numerically) collinear."""


class Separation(RecalibError):
    """Logistic fit diverged; data are (quasi-)separated."""


class NonConvergence(RecalibError):
    """Iterative fit did not converge within the iteration budget."""


class ZeroSlope(RecalibError):
    """A calibration slope of exactly zero makes the ratio estimator undefined."""


class NearZeroCalibrationSlope(RecalibError):
    """Calibration slope is too close to zero for a stable corrected estimate."""


class InconsistentCorrelations(RecalibError):
    """Requested correlations do not form a positive-definite structure."""


class InvalidConfig(RecalibError):
    """Configuration violates a documented constraint."""


class EmptyBin(RecalibError):
    """A required stratum holds too few observations."""


class ZeroDenominator(RecalibError):
    """Binned exposure contrast is (numerically) zero."""


class TooManyFailures(RecalibError):
    """More than 10% of simulation replicates failed to produce an estimate."""


class SchemaError(RecalibError):
    """Input file does not match the expected schema."""


class UnsupportedRole(RecalibError):
    """Covariate role outside the supported taxonomy (e.g. caused by the exposure)."""
