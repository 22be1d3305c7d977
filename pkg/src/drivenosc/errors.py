"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A numerical procedure failed hard (integrator breakdown, eigensolver
    non-convergence, basis overflow).  Maps to CLI exit code 3."""


class GateError(RuntimeError):
    """A convergence gate was breached (unitarity residual or basis tail mass
    beyond its limit).  Maps to CLI exit code 4."""


class ConfigError(ValueError):
    """Invalid experiment configuration.  Maps to CLI exit code 2."""
