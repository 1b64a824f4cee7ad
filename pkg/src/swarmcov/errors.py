"""Exception hierarchy shared by every module."""
from __future__ import annotations



class SwarmCovError(Exception):
    """Base class for all package errors."""


class ParameterError(SwarmCovError, ValueError):
    """An argument violates a documented precondition."""


class EvaluationError(SwarmCovError, ArithmeticError):
    """An integrand produced a non-finite value."""


class QuadratureResolutionError(SwarmCovError):
    """The quadrature grid is too coarse for the requested metric."""


class FitError(SwarmCovError):
    """A curve fit could not be performed."""


class AnalysisError(SwarmCovError):
    """A benchmark analysis could not be completed (non-convergence etc.)."""


class SettlingError(AnalysisError):
    """The trajectory ends before the fitted settling time."""


class EfficiencyError(SwarmCovError):
    """Rejection sampling accepts too rarely to be practical."""


class StatisticalTestError(SwarmCovError):
    """A two-sample test is undefined for the given data."""


class InputError(ParameterError):
    """A data file is malformed; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
