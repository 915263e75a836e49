class EsnError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 3


class ConfigError(EsnError, ValueError):
    """Invalid hyperparameters or arguments."""

    exit_code = 1


class DataError(EsnError, ValueError):
    """Input data is malformed or too short for the requested protocol."""

    exit_code = 2


class NumericalError(EsnError, ArithmeticError):
    """A numerical procedure failed (singular system, divergence, ...)."""

    exit_code = 3


class UntrainedError(EsnError, RuntimeError):
    """A readout was requested from a model whose readout is not fitted."""

    exit_code = 3
