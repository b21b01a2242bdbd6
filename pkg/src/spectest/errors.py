"""Exception types raised by spectest."""


class SpectestError(Exception):
    """Base class for all spectest errors."""


class InputError(SpectestError, ValueError):
    """Invalid argument, shape mismatch or out-of-range index."""


class DegenerateScaleError(SpectestError, ArithmeticError):
    """A variance estimate needed for studentization is zero."""


class BandwidthWarning(UserWarning):
    """Bandwidth outside the heuristic window implied by the rate conditions."""


class NegativeVarianceWarning(UserWarning):
    """A plug-in variance estimate came out negative and was clamped at zero."""
