"""Exception types raised across the package."""


class NetsyncError(Exception):
    """Base class for all package errors."""


class NonSymmetric(NetsyncError, ValueError):
    pass


class NonSquare(NetsyncError, ValueError):
    pass


class InvalidSize(NetsyncError, ValueError):
    pass


class DimensionMismatch(NetsyncError, ValueError):
    pass


class NegativeEnvelope(NetsyncError, ValueError):
    pass


class Disconnected(NetsyncError, ValueError):
    """The Laplacian has no nonzero eigenvalue to certify against."""


class InfeasibleCertificate(NetsyncError, ValueError):
    """No positive margin exists, so the requested bound is undefined."""


class MissingReference(NetsyncError, ValueError):
    pass


class NonFiniteState(NetsyncError, ArithmeticError):
    """Integration produced NaN or Inf.

    Attributes
    ----------
    time : float
        Time of the step at which the non-finite value first appeared.
    """

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"non-finite state at t={self.time:.6g}")


class ConfigError(NetsyncError, ValueError):
    """Invalid scenario configuration. ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
