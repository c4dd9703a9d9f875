"""Exception hierarchy shared by all modules."""


class CombScatterError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CombScatterError, ValueError):
    """Invalid model, comb, pump or simulation configuration."""


class NumericalError(CombScatterError, ArithmeticError):
    """Base class for numerical failures (singularity, divergence)."""


class NumericalSingularityError(NumericalError):
    """Raised when a coupled-mode matrix is singular or too ill-conditioned.

    Attributes
    ----------
    condition : float
        Estimated condition number at the time of failure.
    """

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class InstabilityError(NumericalError):
    """Time-domain integration diverged (pumps above oscillation threshold)."""


class NormalizationError(CombScatterError, ValueError):
    """Pump-off reference has zero magnitude where a division is needed."""


class ParseError(CombScatterError, ValueError):
    """Malformed measured-data or matrix file."""
