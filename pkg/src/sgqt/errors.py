"""Exception hierarchy shared by every sgqt module."""


class SGQTError(Exception):
    """Base class for all sgqt errors."""


class DimensionError(SGQTError, ValueError):
    """Vector lengths or qubit counts do not agree."""


class DegenerateParametrizationError(SGQTError, ValueError):
    """A parameter vector cannot be normalized into a state (all zeros)."""


class ParameterError(SGQTError, ValueError):
    """A scalar argument lies outside its allowed range."""


class ConfigError(SGQTError, ValueError):
    """An experiment configuration is inconsistent."""


class FitError(SGQTError, ValueError):
    """A power-law fit is underdetermined or has invalid data."""


class DomainError(FitError):
    """Fit data contain non-positive values, so logarithms are undefined."""
