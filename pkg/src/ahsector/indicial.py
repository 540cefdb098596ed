"""Indicial polynomials, roots and Fredholm weight windows.

Every operator handled here has an indicial polynomial of the form

    lambda - s**2 + (n - 1) s + b

where ``b`` is a block constant: 0 for the scalar Laplacian and the purely
tangential trace-free block V3, ``n`` for the mixed block V2, and ``2(n - 1)``
for the normal block V1 and the trace part.  The constants are reconstructed
by matching the closed-form root pairs of the Lichnerowicz-type operator
``Delta_L - 2(n - 1)``; the roots are symmetric about ``(n - 1)/2``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError

__all__ = [
    "Block",
    "BlockSet",
    "IndicialPolynomial",
    "RootPair",
    "FredholmWindow",
    "block_constant",
    "principal_sqrt",
    "scalar_indicial_poly",
    "block_indicial_poly",
    "scalar_indicial_roots",
    "block_indicial_roots",
    "lichnerowicz_indicial_roots",
    "indicial_radius",
    "fredholm_weight_window",
]


class Block(str, enum.Enum):
    SCALAR = "Scalar"
    V1 = "V1"
    V2 = "V2"
    V3 = "V3"
    TRACE = "Trace"


class BlockSet(str, enum.Enum):
    SCALAR_ONLY = "ScalarOnly"
    LICHNEROWICZ_ALL = "LichnerowiczAll"


_BLOCKS_IN_SET = {
    BlockSet.SCALAR_ONLY: (Block.SCALAR,),
    BlockSet.LICHNEROWICZ_ALL: (Block.V1, Block.V2, Block.V3, Block.TRACE),
}


def _check_dimension(n: int) -> int:
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {n!r}")
    return int(n)


def block_constant(block: Block | str, n: int) -> int:
    """Constant ``b`` such that the indicial polynomial of ``lambda - P`` is
    ``lambda - s**2 + (n-1)s + b``.

    The block operator itself then carries the zeroth-order constant ``-b``.
    """
    n = _check_dimension(n)
    block = Block(block)
    if block in (Block.V1, Block.TRACE):
        return 2 * (n - 1)
    if block is Block.V2:
        return n
    return 0


def principal_sqrt(z: complex) -> complex:
    """Square root with nonnegative real part.

    On the branch cut (negative reals, either sign of zero imaginary part) the
    root ``+i sqrt(|z|)`` is returned.
    """
    z = complex(z)
    if z.imag == 0.0 and z.real < 0.0:
        return complex(0.0, math.sqrt(-z.real))
    return cmath.sqrt(z)


@dataclass(frozen=True)
class RootPair:
    minus: complex
    plus: complex

    def __iter__(self):
        yield self.minus
        yield self.plus

    @property
    def is_double(self) -> bool:
        return self.minus == self.plus


@dataclass(frozen=True)
class IndicialPolynomial:
    """``a2 s**2 + a1 s + a0`` for one operator block at spectral shift ``lam``."""

    n: int
    block: Block
    lam: complex
    coefficients: tuple[complex, complex, complex]

    def __call__(self, s):
        a2, a1, a0 = self.coefficients
        return (a2 * s + a1) * s + a0

    @property
    def discriminant(self) -> complex:
        a2, a1, a0 = self.coefficients
        return a1 * a1 - 4 * a2 * a0

    def roots(self) -> RootPair:
        center = (self.n - 1) / 2
        half = 0.5 * principal_sqrt(self.discriminant)
        return RootPair(center - half, center + half)


def block_indicial_poly(block: Block | str, n: int, lam: complex) -> IndicialPolynomial:
    n = _check_dimension(n)
    block = Block(block)
    b = block_constant(block, n)
    lam = complex(lam)
    return IndicialPolynomial(n=n, block=block, lam=lam, coefficients=(-1.0 + 0j, complex(n - 1), lam + b))


def scalar_indicial_poly(n: int, lam: complex) -> IndicialPolynomial:
    """Indicial polynomial of ``lambda - Delta`` on functions."""
    return block_indicial_poly(Block.SCALAR, n, lam)


def block_indicial_roots(block: Block | str, n: int, lam: complex) -> RootPair:
    return block_indicial_poly(block, n, lam).roots()


def scalar_indicial_roots(n: int, lam: complex) -> RootPair:
    """Roots ``(n-1)/2 -/+ sqrt((n-1)**2 + 4 lam)/2``, ordered by real part."""
    return block_indicial_roots(Block.SCALAR, n, lam)


def lichnerowicz_indicial_roots(n: int, lam: complex) -> tuple[RootPair, RootPair, RootPair, RootPair]:
    """Root pairs for the blocks (V1, V2, V3, trace); the trace pair repeats V1."""
    return tuple(block_indicial_roots(b, n, lam) for b in (Block.V1, Block.V2, Block.V3, Block.TRACE))


@dataclass(frozen=True)
class FredholmWindow:
    """Open weight interval ``(mu_min, mu_max)`` on which ``lambda - P`` is Fredholm."""

    mu_min: float
    mu_max: float
    radius: float

    @property
    def empty(self) -> bool:
        return not self.mu_min < self.mu_max

    def contains(self, mu: float) -> bool:
        return self.mu_min < mu < self.mu_max


def fredholm_weight_window(block_set: BlockSet | str, n: int, lam: complex) -> FredholmWindow:
    n = _check_dimension(n)
    blocks = _BLOCKS_IN_SET[BlockSet(block_set)]
    radius = min(0.5 * principal_sqrt(block_indicial_poly(b, n, lam).discriminant).real for b in blocks)
    center = (n - 1) / 2
    if radius <= 0.0:
        return FredholmWindow(center, center, 0.0)
    return FredholmWindow(center - radius, center + radius, radius)


def indicial_radius(block_set: BlockSet | str, n: int) -> float:
    """Half-width of the root-free interval about ``(n-1)/2`` at ``lambda = 0``."""
    return fredholm_weight_window(block_set, n, 0.0).radius


def brute_force_roots(poly: IndicialPolynomial) -> np.ndarray:
    """Companion-matrix roots of ``poly``, sorted by real part (independent check)."""
    r = np.roots(np.asarray(poly.coefficients, dtype=complex))
    return r[np.argsort(r.real, kind="stable")]
