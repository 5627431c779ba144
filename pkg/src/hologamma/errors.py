"""Exception types shared across the package."""


class HologammaError(Exception):
    """Base class for all package errors."""


class DimensionError(HologammaError, ValueError):
    """Array or image has unusable dimensions."""


class BoundsError(HologammaError, ValueError):
    """Region of interest falls outside its host image."""


class ConfigurationError(HologammaError, ValueError):
    pass


class FiducialNotFoundError(HologammaError):
    """No fiducial column stands out from the capture."""


class InsufficientDataError(HologammaError, ValueError):
    pass


class ConditioningError(HologammaError):
    """Least-squares system is rank deficient."""


class DegenerateCurveError(HologammaError):
    """Fitted response is constant over [0, 1] and cannot be inverted."""


class ProfileError(HologammaError):
    """Calibration profile is corrupt or has an unsupported version."""


class CalibrationWarning(UserWarning):
    """Non-fatal calibration diagnostic (clipping, non-monotone fit)."""
