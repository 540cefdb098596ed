"""Sectoriality diagnostics for Laplace-type operators on asymptotically hyperbolic collars."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AHSectorError,
    AssemblyError,
    ConfigError,
    ContourError,
    DimensionCapError,
    DomainError,
    InvalidDimensionError,
    InvalidParameterError,
    NearSpectrumError,
    RangeError,
    ResolutionError,
    SymmetrizationError,
)
