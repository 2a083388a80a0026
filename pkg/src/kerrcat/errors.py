"""Exception hierarchy.

Everything raised on purpose by this package derives from KerrcatError so
callers can catch one type at the CLI boundary.
"""


class KerrcatError(Exception):
    """Base class for all package errors."""


class ConfigError(KerrcatError):
    """Invalid, inconsistent, or unrecognized configuration input."""


class TruncationError(KerrcatError):
    """Requested object does not fit in the Fock cutoff."""


class PropagationError(KerrcatError):
    """Integrator failed to produce a propagator."""


class QualityError(KerrcatError):
    """A result was produced but fails its quality gate (e.g. unitarity)."""


class CalibrationError(KerrcatError):
    """Drive calibration failed to converge or produced unusable parameters."""


class ClassificationError(KerrcatError):
    """State classification could not be performed."""


class WindowError(KerrcatError):
    """Phase-space window too small for the state being analyzed."""


class RegimeError(KerrcatError):
    """Parameters outside the regime where the requested quantity exists."""


class FitError(KerrcatError):
    """Not enough usable data for a requested fit."""
