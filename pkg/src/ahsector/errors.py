"""Exception hierarchy shared by every module."""

from __future__ import annotations


class AHSectorError(Exception):
    """Base class for all errors raised by the package."""


class InvalidDimensionError(AHSectorError, ValueError):
    pass


class InvalidParameterError(AHSectorError, ValueError):
    pass


class DomainError(AHSectorError, ValueError):
    """A point or stencil lies outside the collar where the metric is defined."""


class ResolutionError(AHSectorError, ValueError):
    pass


class AssemblyError(AHSectorError, ValueError):
    pass


class SymmetrizationError(AHSectorError, ValueError):
    """The operator has no diagonal symmetrizer; use spectral-abscissa estimation instead."""


class RangeError(AHSectorError, OverflowError):
    pass


class DimensionCapError(AHSectorError, ValueError):
    pass


class NearSpectrumError(AHSectorError, ArithmeticError):
    """The shift is (numerically) an eigenvalue of the operator matrix.

    Attributes
    ----------
    shift : complex
        The offending spectral parameter.
    condition : float
        Condition estimate of ``shift*I - A`` (``inf`` for an exactly singular factor).
    """

    def __init__(self, shift: complex, condition: float, message: str | None = None):
        self.shift = complex(shift)
        self.condition = float(condition)
        if message is None:
            message = f"shift {self.shift} is numerically in the spectrum (condition estimate {self.condition:.3e})"
        super().__init__(message)


class ContourError(AHSectorError, ArithmeticError):
    def __init__(self, node: complex, index: int, cause: Exception | None = None):
        self.node = complex(node)
        self.index = index
        msg = f"contour node #{index} at {self.node} hits the spectrum"
        if cause is not None:
            msg += f": {cause}"
        super().__init__(msg)


class ConfigError(AHSectorError, ValueError):
    def __init__(self, problems: list[str] | str):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))
