"""Exception hierarchy shared by all solvers."""

from __future__ import annotations


class NmvmError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(NmvmError, ValueError):
    """Invalid distribution, utility or model parameters."""


class ValidationError(NmvmError):
    """A model failed validation; ``report`` holds the individual failures."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(report.failures) or "validation failed")


class UnsupportedModelError(NmvmError):
    """The requested operation is not defined for this model (e.g. EZ infinite)."""


class DegenerateModelError(NmvmError):
    """The optimization problem has no finite, non-trivial answer."""


class NumericalError(NmvmError, ArithmeticError):
    """Overflow or a failed numeric routine."""


class UtilityRangeError(NmvmError, ValueError):
    """An expected utility lies outside the range of the utility function."""
