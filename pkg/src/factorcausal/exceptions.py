"""Exception hierarchy shared across the package."""


class FactorCausalError(Exception):
    """Base class for errors raised by this package."""


class DataError(FactorCausalError, ValueError):
    """Malformed, missing or insufficient input data."""


class ConfigError(FactorCausalError, ValueError):
    """Invalid run configuration."""


class EstimationError(FactorCausalError, ArithmeticError):
    """A numerical procedure could not produce a valid estimate."""


class RankDeficiencyError(EstimationError):
    """Design matrix is not of full column rank."""

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class ConvergenceError(EstimationError):
    """An iterative fit stopped before meeting its tolerance."""
