class ResumError(Exception):
    """Base class for every error raised by the summation engine."""


############# Input / configuration errors #############

class InvalidWeightError(ResumError, ValueError):
    """The multi-index or weight description yields a bounded or otherwise invalid L."""


class FastGrowthError(ResumError, ValueError):
    """alpha0 >= 1: the weight grows too fast to be slowly varying."""


class DomainError(ResumError, ValueError):
    """Argument outside the sector (or set) where the quantity is defined."""


class ConfigError(ResumError, ValueError):
    """Grid, contour or experiment parameters are unusable."""


class PreconditionError(ResumError, ValueError):
    """An operation was called outside its documented preconditions."""


class UsageError(ResumError, ValueError):
    """Bad command-line or export request."""


class InsufficientDataError(ResumError, ValueError):
    """Too few coefficients or samples for a statistical verdict."""


class BelowThresholdError(ResumError, ValueError):
    """The requested point lies below the threshold where asymptotics are trusted."""


############# Numerical failures #############

class DivergentIntegralError(ResumError, RuntimeError):
    """A tail integral diverges; for dual weights this signals quasianalyticity."""


class SaddleFailureError(ResumError, RuntimeError):
    """Newton iteration for the saddle-point equation did not converge."""


class TruncationFailureError(ResumError, RuntimeError):
    """A series could not be truncated within the term budget."""


class QuadratureError(ResumError, RuntimeError):
    """A quadrature rule did not reach the requested tolerance."""


class PrecisionExhaustedError(ResumError, RuntimeError):
    """Cancellation exceeds the extended-precision budget."""


class DivergentIntegrandError(ResumError, RuntimeError):
    """The integrand of a regular transform does not decay on the usable range."""


class ConstructionIncompleteError(ResumError, RuntimeError):
    """The lacunary construction could not place the requested number of indices.

    Attributes:
        partial (Any): whatever part of the construction was completed.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class MissingCacheError(ResumError, FileNotFoundError):
    """Offline mode was requested but the kernel cache file is absent."""
