"""Sector geometry.

A sector with vertex ``omega`` and half-angle excess ``delta`` is the open set
``{lam != omega : |arg(lam - omega)| < pi/2 + delta}``.  The main computation
here certifies, on a sample grid, how far a sector can open beyond the
half-plane while keeping ``Re sqrt(A**2 + 4 lam) > (1 - eps) A``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidParameterError

__all__ = [
    "SectorSpec",
    "SectorGrid",
    "SectorCertificate",
    "max_sector_halfangle_excess",
    "sector_inf_re_sqrt",
    "sector_contains",
    "translated_sector",
    "sector_boundary_samples",
    "interior_ray_angles",
]


@dataclass(frozen=True)
class SectorSpec:
    vertex: complex = 0.0
    half_angle_excess: float = 0.0

    def __post_init__(self):
        d = float(self.half_angle_excess)
        if not (0.0 <= d < math.pi / 2):
            raise InvalidParameterError(f"half-angle excess must lie in [0, pi/2), got {d}")
        object.__setattr__(self, "half_angle_excess", d)
        object.__setattr__(self, "vertex", complex(self.vertex))

    @property
    def opening(self) -> float:
        """Half-opening angle ``pi/2 + delta``."""
        return math.pi / 2 + self.half_angle_excess

    def contains(self, lam: complex) -> bool:
        return sector_contains(self, lam)

    def to_dict(self) -> dict:
        return {
            "vertex": [self.vertex.real, self.vertex.imag],
            "half_angle_excess": self.half_angle_excess,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SectorSpec":
        v = d.get("vertex", 0.0)
        if isinstance(v, (list, tuple)):
            v = complex(v[0], v[1])
        return cls(vertex=complex(v), half_angle_excess=float(d.get("half_angle_excess", 0.0)))


def sector_contains(spec: SectorSpec, lam: complex) -> bool:
    z = complex(lam) - spec.vertex
    if z == 0:
        return False
    return abs(cmath.phase(z)) < spec.opening


def translated_sector(spec: SectorSpec, shift: float) -> SectorSpec:
    return replace(spec, vertex=spec.vertex + shift)


def sector_boundary_samples(spec: SectorSpec, r_min: float, r_max: float, count: int) -> np.ndarray:
    """Log-spaced points on both boundary rays; upper ray first, then its conjugate image."""
    if not (0 < r_min <= r_max) or not math.isfinite(r_max):
        raise InvalidParameterError(f"need 0 < r_min <= r_max, got ({r_min}, {r_max})")
    if count < 2:
        raise InvalidParameterError("count must be >= 2")
    r = np.geomspace(r_min, r_max, int(count))
    up = r * np.exp(1j * spec.opening)
    return np.concatenate([spec.vertex + up, spec.vertex + np.conj(up)])


def interior_ray_angles(spec: SectorSpec) -> tuple[float, float, float]:
    """Interior sweep rays: the positive axis and ``+-pi/4 (1 + 2 delta/pi)``."""
    a = math.pi / 4 * (1 + 2 * spec.half_angle_excess / math.pi)
    return (0.0, a, -a)


@dataclass(frozen=True)
class SectorGrid:
    """Sampling of the boundary rays used to certify a sector.

    ``count`` log-spaced radii in ``[r_min, r_max]`` plus ``near_zero`` linearly
    spaced radii in ``(0, r_min]``.  With ``refine`` the grid minimum is
    polished by a bounded scalar minimisation between its neighbours.
    """

    r_min: float = 1e-6
    r_max: float = 1e6
    count: int = 400
    near_zero: int = 16
    refine: bool = True

    def radii(self) -> np.ndarray:
        near = np.linspace(0.0, self.r_min, self.near_zero + 1)[1:]
        return np.concatenate([near, np.geomspace(self.r_min, self.r_max, self.count)])

    def scaled(self, factor: int) -> "SectorGrid":
        return replace(self, count=self.count * factor, near_zero=self.near_zero * factor)


@dataclass(frozen=True)
class SectorCertificate:
    delta: float
    certificate: float
    threshold: float
    grid: SectorGrid
    A: float
    epsilon: float

    def __iter__(self):
        yield self.delta
        yield self.certificate


def _re_sqrt(A: float, lam: np.ndarray) -> np.ndarray:
    # np.sqrt uses the principal branch; Re >= 0 regardless of the cut side.
    return np.sqrt(A * A + 4 * lam + 0j).real


def sector_inf_re_sqrt(A: float, delta: float, grid: SectorGrid = SectorGrid()) -> float:
    """Sampled infimum of ``Re sqrt(A**2 + 4 lam)`` over the sector of excess ``delta``.

    For fixed ``Im lam`` the quantity increases with ``Re lam``, so the infimum
    over the sector is attained on its two boundary rays (mirror images).
    """
    phi = math.pi / 2 + delta
    r = grid.radii()
    e = cmath.exp(1j * phi)
    vals = np.minimum(_re_sqrt(A, r * e), _re_sqrt(A, r * e.conjugate()))
    k = int(np.argmin(vals))
    best = float(vals[k])
    if grid.refine and 0 < k < len(r) - 1:
        lo, hi = r[k - 1], r[k + 1]
        res = minimize_scalar(
            lambda x: float(_re_sqrt(A, np.array([x * e]))[0]),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-14 * max(hi, 1.0)},
        )
        best = min(best, float(res.fun))
    return min(best, A)


def max_sector_halfangle_excess(
    A: float,
    epsilon: float,
    resolution: SectorGrid = SectorGrid(),
    tol: float = 1e-4,
) -> SectorCertificate:
    """Largest sampled ``delta`` with ``inf Re sqrt(A**2 + 4 lam) > (1 - eps) A`` on the sector.

    The admissible set of ``delta`` is an interval starting at 0 (the
    half-plane always qualifies), so the boundary is located by bisection to
    within ``tol`` radians.  The returned certificate is the sampled infimum at
    the returned ``delta``.
    """
    if not (A > 0 and math.isfinite(A)):
        raise InvalidParameterError(f"A must be positive, got {A}")
    if not (0.0 < epsilon < 1.0):
        raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    threshold = (1.0 - epsilon) * A

    def ok(d: float) -> bool:
        return sector_inf_re_sqrt(A, d, resolution) > threshold

    lo, hi = 0.0, math.pi / 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return SectorCertificate(
        delta=lo,
        certificate=sector_inf_re_sqrt(A, lo, resolution),
        threshold=threshold,
        grid=resolution,
        A=float(A),
        epsilon=float(epsilon),
    )
