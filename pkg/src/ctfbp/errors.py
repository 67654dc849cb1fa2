"""Exception types shared across the package."""


class CtfbpError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGeometryError(CtfbpError, ValueError):
    """Sampling geometry parameters are inconsistent or out of range."""


class DimensionMismatchError(CtfbpError, ValueError):
    """Array shapes or grids do not agree between operands."""


class SupportViolationError(CtfbpError, ValueError):
    """An object extends beyond the declared support disk."""


class ParameterError(CtfbpError, ValueError):
    """A scalar parameter is outside its admissible range."""


class FormatError(CtfbpError, ValueError):
    """A file or config does not conform to its declared format."""


class FactorizationError(CtfbpError, RuntimeError):
    """A covariance matrix could not be Cholesky-factorized."""


class ConfigError(CtfbpError, ValueError):
    """An experiment configuration is invalid; message names the key."""
