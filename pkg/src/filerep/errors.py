"""Exception types shared across the package."""


class FilerepError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(FilerepError, ValueError):
    """Invalid model or scaling parameters."""


class CapacityError(FilerepError, ValueError):
    """State violates the finite-capacity constraint x1 + 2*x2 <= F_N."""


class DomainError(FilerepError, ValueError):
    """Point or time outside the admissible domain of an operation."""


class RegimeError(FilerepError, ValueError):
    """Operation requested in a load regime where it is undefined."""


class ToleranceError(FilerepError, RuntimeError):
    """Requested numerical tolerance cannot be met."""


class SimulationError(FilerepError, RuntimeError):
    """A stochastic run did not produce the event the caller required."""


class ConfigError(FilerepError, ValueError):
    """Scenario configuration file is malformed or inconsistent."""
