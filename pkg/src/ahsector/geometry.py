"""Collar geometry of an asymptotically hyperbolic model metric.

Coordinates are ``(rho, theta^1, ..., theta^{n-1})`` on the collar
``0 < rho <= collar_extent``.  Tensors are expressed in the 0-frame
``rho d/drho, rho d/dtheta`` so that the model metric ``(drho^2 + ghat)/rho^2``
has components ``diag(1, ghat(theta))``.  The perturbation is
``k = amplitude * rho**nu * profile(theta^1) * E`` in that frame, where ``E``
selects the radial, mixed or tangential component of the ``(rho, theta^1)``
block.

Weighted Hölder norms are estimated with Möbius charts
``(x, y) -> (rho0 x, theta0 + rho0 y)`` restricted to the two-dimensional
``(rho, theta^1)`` collar.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import AssemblyError, DomainError, InvalidParameterError, ResolutionError

__all__ = [
    "AHMetricSpec",
    "MobiusChart",
    "ChartCover",
    "HolderParams",
    "GridFunction",
    "PROFILES",
    "model_metric_components",
    "coordinate_metric",
    "metric_eigen_floor",
    "mobius_chart_map",
    "mobius_chart_inverse",
    "chart_cover",
    "weighted_holder_norm_estimate",
    "chart_holder_norms",
    "sectional_curvatures",
    "curvature_defect",
]

BOUNDARY_METRICS = ("FlatTorus", "RoundSphereSlice")
COMPONENTS = {"radial": (0, 0), "mixed": (0, 1), "tangential": (1, 1)}


def _cosine(theta, period):
    k = 2 * math.pi / period
    return np.cos(k * theta), -k * np.sin(k * theta)


def _bump(theta, period):
    k = 2 * math.pi / period
    v = np.exp(np.cos(k * theta) - 1.0)
    return v, -k * np.sin(k * theta) * v


def _constant(theta, period):
    theta = np.asarray(theta, dtype=float)
    return np.ones_like(theta), np.zeros_like(theta)


# name -> (value and first derivative, sup of |value|)
PROFILES: dict[str, tuple[Callable, float]] = {
    "cosine": (_cosine, 1.0),
    "bump": (_bump, 1.0),
    "constant": (_constant, 1.0),
}


@dataclass(frozen=True)
class AHMetricSpec:
    """Model metric plus a decaying perturbation on the collar.

    ``period`` is the side length of the flat torus (all boundary directions);
    for the round sphere slice the boundary coordinates are the standard
    spherical angles and ``period`` is only used by the perturbation profile.
    """

    n: int = 3
    boundary_metric: str = "FlatTorus"
    period: float = 2 * math.pi
    nu: float = 1.0
    amplitude: float = 0.0
    profile: str = "cosine"
    component: str = "tangential"
    collar_extent: float = 1.0

    def __post_init__(self):
        problems = []
        if int(self.n) != self.n or self.n < 2:
            problems.append(f"n must be an integer >= 2, got {self.n}")
        if self.boundary_metric not in BOUNDARY_METRICS:
            problems.append(f"boundary_metric must be one of {BOUNDARY_METRICS}")
        if not self.nu > 0:
            problems.append(f"nu must be positive, got {self.nu}")
        if self.profile not in PROFILES:
            problems.append(f"unknown profile {self.profile!r}; choose from {sorted(PROFILES)}")
        if self.component not in COMPONENTS:
            problems.append(f"unknown component {self.component!r}; choose from {sorted(COMPONENTS)}")
        if not self.period > 0:
            problems.append("period must be positive")
        if not self.collar_extent > 0:
            problems.append("collar_extent must be positive")
        if problems:
            raise InvalidParameterError("; ".join(problems))

    @property
    def profile_bound(self) -> float:
        return PROFILES[self.profile][1]

    def profile_values(self, theta1):
        """Profile value and its derivative at ``theta1``."""
        return PROFILES[self.profile][0](np.asarray(theta1, dtype=float), self.period)

    @property
    def pattern(self) -> np.ndarray:
        """Symmetric 2x2 selector ``E`` on the ``(rho, theta^1)`` block."""
        i, j = COMPONENTS[self.component]
        E = np.zeros((2, 2))
        E[i, j] = E[j, i] = 1.0
        return E

    def to_dict(self) -> dict:
        return asdict(self)


def _as_point(spec: AHMetricSpec, point) -> tuple[float, np.ndarray]:
    rho, theta = point
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.size == 1 and spec.n - 1 > 1:
        theta = np.concatenate([theta, np.full(spec.n - 2, math.pi / 2)])
    if theta.size != spec.n - 1:
        raise InvalidParameterError(f"expected {spec.n - 1} boundary coordinates, got {theta.size}")
    rho = float(rho)
    if not (0.0 < rho <= spec.collar_extent):
        raise DomainError(f"rho={rho} outside the collar (0, {spec.collar_extent}]")
    return rho, theta


def _boundary_metric_diag(spec: AHMetricSpec, theta: np.ndarray) -> np.ndarray:
    if spec.boundary_metric == "FlatTorus":
        return np.ones(spec.n - 1)
    # round metric on S^{n-1}: dphi1^2 + sin^2 phi1 dphi2^2 + sin^2 phi1 sin^2 phi2 dphi3^2 + ...
    s2 = np.sin(theta) ** 2
    return np.concatenate([[1.0], np.cumprod(s2[:-1])])


def model_metric_components(spec: AHMetricSpec, point) -> np.ndarray:
    """Metric components on the 0-frame at ``point = (rho, theta)``."""
    rho, theta = _as_point(spec, point)
    G = np.diag(np.concatenate([[1.0], _boundary_metric_diag(spec, theta)]))
    if spec.amplitude:
        beta, _ = spec.profile_values(theta[0])
        G[:2, :2] += spec.amplitude * rho**spec.nu * float(beta) * spec.pattern
    return G


def coordinate_metric(spec: AHMetricSpec, x: np.ndarray) -> np.ndarray:
    """Metric in the coordinate basis ``(d rho, d theta)`` at ``x = (rho, theta...)``."""
    x = np.asarray(x, dtype=float)
    return model_metric_components(spec, (x[0], x[1:])) / x[0] ** 2


def metric_eigen_floor(spec: AHMetricSpec, rho: Sequence[float], theta1: Sequence[float]) -> float:
    """Smallest eigenvalue of the perturbed ``(rho, theta^1)`` frame block over a grid."""
    rho = np.asarray(rho, dtype=float)[:, None]
    beta, _ = spec.profile_values(np.asarray(theta1, dtype=float)[None, :])
    p = spec.amplitude * rho**spec.nu * beta
    E = spec.pattern
    a = 1 + p * E[0, 0]
    c = 1 + p * E[1, 1]
    b = p * E[0, 1]
    lo = 0.5 * (a + c) - np.sqrt(0.25 * (a - c) ** 2 + b * b)
    return float(lo.min())


# --------------------------------------------------------------------------- curvature


def sectional_curvatures(metric: Callable[[np.ndarray], np.ndarray], x: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """Sectional curvatures of all coordinate 2-planes by central differences.

    ``metric(x)`` returns the coordinate metric matrix.  Returns an ``(m, m)``
    array with ``K[i, j]`` the curvature of the ``(e_i, e_j)`` plane.
    """
    x = np.asarray(x, dtype=float)
    m = x.size
    I = np.eye(m)
    g0 = metric(x)
    dg = np.empty((m, m, m))  # dg[k, i, j] = d_k g_ij
    ddg = np.empty((m, m, m, m))  # ddg[k, l, i, j]
    for k in range(m):
        hk = steps[k] * I[k]
        gp, gm = metric(x + hk), metric(x - hk)
        dg[k] = (gp - gm) / (2 * steps[k])
        ddg[k, k] = (gp - 2 * g0 + gm) / steps[k] ** 2
    for k, l in itertools.combinations(range(m), 2):
        hk, hl = steps[k] * I[k], steps[l] * I[l]
        d = (metric(x + hk + hl) - metric(x + hk - hl) - metric(x - hk + hl) + metric(x - hk - hl)) / (
            4 * steps[k] * steps[l]
        )
        ddg[k, l] = ddg[l, k] = d
    ginv = np.linalg.inv(g0)
    # Christoffel symbols of the first kind: Gamma_{kij} = 1/2 (d_i g_jk + d_j g_ik - d_k g_ij)
    gam1 = 0.5 * (np.einsum("ijk->kij", dg) + np.einsum("jik->kij", dg) - dg)
    gam2 = np.einsum("pk,kij->pij", ginv, gam1)  # Gamma^p_{ij}
    K = np.zeros((m, m))
    for i, j in itertools.combinations(range(m), 2):
        # R_{ijij} with R_{abcd} = 1/2(g_ad,bc + g_bc,ad - g_ac,bd - g_bd,ac) + g_pq(G^p_bc G^q_ad - G^p_bd G^q_ac)
        a, b, c, d = i, j, i, j
        R = 0.5 * (ddg[b, c, a, d] + ddg[a, d, b, c] - ddg[b, d, a, c] - ddg[a, c, b, d])
        R += g0.dot(gam2[:, b, c]).dot(gam2[:, a, d]) - g0.dot(gam2[:, b, d]).dot(gam2[:, a, c])
        area = g0[i, i] * g0[j, j] - g0[i, j] ** 2
        K[i, j] = K[j, i] = R / area
    return K


def curvature_defect(spec: AHMetricSpec, point, rel_step: float = 1e-3) -> float:
    """``max |K + 1|`` over coordinate 2-planes at ``point``.

    Finite-difference steps are ``rel_step * rho`` in every coordinate, the
    natural length scale of the geometry at height ``rho``.
    """
    rho, theta = _as_point(spec, point)
    h = rel_step * rho
    reach = 2 * h
    if rho - reach <= 0 or rho + reach > spec.collar_extent:
        raise DomainError(f"curvature stencil at rho={rho} (reach {reach:g}) leaves the collar")
    if spec.boundary_metric == "RoundSphereSlice":
        if np.any(theta[:-1] - reach <= 0) or np.any(theta[:-1] + reach >= math.pi):
            raise DomainError("curvature stencil leaves the spherical coordinate patch")
    x = np.concatenate([[rho], theta])

    def metric(y):
        G = np.diag(np.concatenate([[1.0], _boundary_metric_diag(spec, y[1:])]))
        if spec.amplitude:
            beta, _ = spec.profile_values(y[1])
            G[:2, :2] += spec.amplitude * y[0] ** spec.nu * float(beta) * spec.pattern
        return G / y[0] ** 2

    K = sectional_curvatures(metric, x, np.full(x.size, h))
    iu = np.triu_indices(x.size, 1)
    return float(np.max(np.abs(K[iu] + 1.0)))


# --------------------------------------------------------------------------- Möbius charts


@dataclass(frozen=True)
class MobiusChart:
    rho0: float
    theta0: float
    radius: float = 1.0

    def __post_init__(self):
        if not self.rho0 > 0:
            raise InvalidParameterError(f"chart centre needs rho0 > 0, got {self.rho0}")


def mobius_chart_map(chart: MobiusChart, xy) -> tuple[float, float]:
    """``(x, y) -> (rho0 x, theta0 + rho0 y)``."""
    x, y = xy
    if not x > 0:
        raise DomainError(f"chart coordinate x must be positive, got {x}")
    return chart.rho0 * x, chart.theta0 + chart.rho0 * y


def mobius_chart_inverse(chart: MobiusChart, rho, theta, period: float | None = None):
    rho = np.asarray(rho, dtype=float)
    dtheta = np.asarray(theta, dtype=float) - chart.theta0
    if period is not None:
        dtheta = (dtheta + 0.5 * period) % period - 0.5 * period
    return rho / chart.rho0, dtheta / chart.rho0


def _in_unit_ball(x, y, radius: float):
    # hyperbolic distance from (1, 0) in the half-space model
    return 1.0 + ((x - 1.0) ** 2 + y**2) / (2.0 * x) < math.cosh(radius)


@dataclass(frozen=True)
class ChartCover:
    charts: tuple[MobiusChart, ...]
    multiplicity_bound: int
    spacing: float
    rho_min: float
    rho_max: float
    period: float | None
    rows: int

    def __len__(self):
        return len(self.charts)

    def membership_counts(self, rho, theta) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        theta = np.asarray(theta, dtype=float)
        counts = np.zeros(np.broadcast(rho, theta).shape, dtype=int)
        for c in self.charts:
            x, y = mobius_chart_inverse(c, rho, theta, self.period)
            counts += _in_unit_ball(x, y, c.radius)
        return counts

    def to_json(self) -> str:
        return json.dumps(
            {
                "charts": [[c.rho0, c.theta0, c.radius] for c in self.charts],
                "multiplicity_bound": self.multiplicity_bound,
                "spacing": self.spacing,
                "rho_min": self.rho_min,
                "rho_max": self.rho_max,
                "period": self.period,
                "rows": self.rows,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ChartCover":
        d = json.loads(text)
        charts = tuple(MobiusChart(*c) for c in d.pop("charts"))
        return cls(charts=charts, **d)


def chart_cover(
    spec: AHMetricSpec,
    density: float,
    rho_min: float = 0.1,
    theta_range: tuple[float, float] | None = None,
) -> ChartCover:
    """Unit-radius Möbius charts covering ``[rho_min, collar_extent] x theta_range``.

    Centres sit on rows ``rho_k = collar_extent * exp(-k s)`` with ``s =
    min(1/density, 1)``; within a row they are spaced by at most ``s rho_k``
    in ``theta``.  That spacing keeps every collar point within hyperbolic
    distance ~0.58 of a centre.  Chart images may poke out above the collar;
    only grid points inside the collar are ever sampled.
    """
    if not density > 0:
        raise InvalidParameterError(f"density must be positive, got {density}")
    if not 0 < rho_min < spec.collar_extent:
        raise InvalidParameterError("need 0 < rho_min < collar_extent")
    s = min(1.0 / density, 1.0)
    if spec.boundary_metric == "FlatTorus" and theta_range is None:
        lo, hi, period = 0.0, spec.period, spec.period
    else:
        lo, hi = theta_range if theta_range is not None else (math.pi / 4, 3 * math.pi / 4)
        period = None
    width = hi - lo

    charts = []
    row_counts = []
    k = 0
    while True:
        rk = spec.collar_extent * math.exp(-k * s)
        if period is not None:
            m = max(1, math.ceil(width / (s * rk)))
            centres = lo + width * np.arange(m) / m
            step = width / m
        else:
            m = max(1, math.ceil(width / (s * rk))) + 1
            centres = lo + width * np.arange(m) / (m - 1)
            step = width / (m - 1)
        charts.extend(MobiusChart(rk, float(c)) for c in centres)
        # points of one row inside a unit ball around p span |dtheta| < w rho_k
        w = math.sqrt(2 * math.e * (math.cosh(1.0) - 1.0))
        row_counts.append(min(m, math.floor(2 * w * rk / step) + 1))
        if rk < rho_min:
            break
        k += 1
    rows_per_ball = math.floor(2 / s) + 1
    bound = max(sum(row_counts[i : i + rows_per_ball]) for i in range(len(row_counts)))
    return ChartCover(
        charts=tuple(charts),
        multiplicity_bound=int(bound),
        spacing=s,
        rho_min=float(rho_min),
        rho_max=float(spec.collar_extent),
        period=period,
        rows=len(row_counts),
    )


# --------------------------------------------------------------------------- grid functions and norms


@dataclass(frozen=True)
class HolderParams:
    alpha: float = 0.5
    mu: float = 0.0
    order: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.order != 0:
            raise InvalidParameterError("only order 0 norms are estimated")


@dataclass
class GridFunction:
    """Complex samples ``values[i, j] = u(rho[i], theta[j])`` on a tensor grid."""

    rho: np.ndarray
    theta: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.rho.size, self.theta.size):
            raise InvalidParameterError("values must have shape (len(rho), len(theta))")

    @classmethod
    def from_callable(cls, f, rho, theta) -> "GridFunction":
        R, T = np.meshgrid(rho, theta, indexing="ij")
        return cls(rho, theta, f(R, T))

    def scaled(self, c: complex) -> "GridFunction":
        return GridFunction(self.rho, self.theta, c * self.values)

    def weighted(self, sigma: float) -> "GridFunction":
        """``rho**sigma * u``."""
        return GridFunction(self.rho, self.theta, self.rho[:, None] ** sigma * self.values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rho", "theta", "re", "im"])
            for i, r in enumerate(self.rho):
                for j, t in enumerate(self.theta):
                    v = self.values[i, j]
                    w.writerow([repr(float(r)), repr(float(t)), repr(float(v.real)), repr(float(v.imag))])

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        rows = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        rho = np.unique(rows[:, 0])
        theta = np.unique(rows[:, 1])
        vals = np.full((rho.size, theta.size), np.nan + 0j)
        i = np.searchsorted(rho, rows[:, 0])
        j = np.searchsorted(theta, rows[:, 1])
        vals[i, j] = rows[:, 2] + 1j * rows[:, 3]
        return cls(rho, theta, vals)


def _max_holder_quotient(x: np.ndarray, y: np.ndarray, f: np.ndarray, alpha: float, block: int = 2048) -> float:
    best = 0.0
    n = f.size
    for start in range(0, n, block):
        sl = slice(start, min(start + block, n))
        dx = x[sl, None] - x[None, :]
        dy = y[sl, None] - y[None, :]
        d = np.hypot(dx, dy)
        df = np.abs(f[sl, None] - f[None, :])
        mask = d > 0
        if np.any(mask):
            best = max(best, float(np.max(df[mask] / d[mask] ** alpha)))
    return best


def chart_holder_norms(
    values: GridFunction,
    params: HolderParams,
    cover: ChartCover,
    max_points_per_chart: int | None = None,
) -> np.ndarray:
    """Per-chart Euclidean ``C^{0,alpha}`` norms of the pulled-back ``rho**-mu u``."""
    R, T = np.meshgrid(values.rho, values.theta, indexing="ij")
    f_all = R ** (-params.mu) * values.values
    out = np.empty(len(cover.charts))
    for idx, chart in enumerate(cover.charts):
        x, y = mobius_chart_inverse(chart, R, T, cover.period)
        inside = _in_unit_ball(x, y, chart.radius)
        rows_hit = np.count_nonzero(inside.any(axis=1))
        cols_hit = np.count_nonzero(inside.any(axis=0))
        if rows_hit < 2 or cols_hit < 2:
            raise ResolutionError(
                f"chart #{idx} (rho0={chart.rho0:.4g}, theta0={chart.theta0:.4g}) holds "
                f"{rows_hit}x{cols_hit} grid points; need at least 2 per axis"
            )
        xs, ys, fs = x[inside], y[inside], f_all[inside]
        if max_points_per_chart is not None and fs.size > max_points_per_chart:
            stride = math.ceil(fs.size / max_points_per_chart)
            xs, ys, fs = xs[::stride], ys[::stride], fs[::stride]
        out[idx] = float(np.max(np.abs(fs))) + _max_holder_quotient(xs, ys, fs, params.alpha)
    return out


def weighted_holder_norm_estimate(
    values: GridFunction,
    params: HolderParams,
    cover: ChartCover,
    max_points_per_chart: int | None = None,
) -> float:
    """``sup_i ||Phi_i^*(rho^-mu u)||_{C^{0,alpha}(B_1)}`` sampled on the grid.

    The Hölder quotient is taken over all pairs of grid points inside each
    chart image, with Euclidean distance in chart coordinates.
    """
    return float(np.max(chart_holder_norms(values, params, cover, max_points_per_chart)))
