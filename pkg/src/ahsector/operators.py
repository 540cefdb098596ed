"""Discrete conjugated operators in the boundary log coordinate ``t = -log rho``.

In ``t`` the 0-derivative ``rho d/drho`` becomes ``-d/dt`` and the weight
``rho**mu`` becomes ``exp(-mu t)``.  The conjugated scalar model on the collar is

    d^2/dt^2 + (n - 1 - 2 mu) d/dt + mu^2 - (n - 1) mu

and the Lichnerowicz model blocks add the zeroth-order constant ``-b`` with
``b`` the block constant of :mod:`ahsector.indicial`.  Everything is
discretised with second-order centred differences.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, InvalidParameterError, RangeError, SymmetrizationError
from .geometry import AHMetricSpec
from .indicial import Block, BlockSet, block_constant, fredholm_weight_window

__all__ = [
    "OperatorKind",
    "BoundaryCondition",
    "Grid1D",
    "Grid2D",
    "FourierSymbol",
    "DiscreteOperator",
    "OperatorDecomposition",
    "assemble_scalar_1d",
    "assemble_scalar_2d",
    "assemble_lichnerowicz_block",
    "assemble_radial_h3",
    "conjugate_by_weight",
    "decompose_operator",
    "symmetrizer",
    "symmetrized_residual",
    "estimate_lambda0",
]

DENSE_EIG_CAP = 2000


class OperatorKind(str, enum.Enum):
    SCALAR_1D = "Scalar1D"
    SCALAR_2D = "Scalar2D"
    LICHNEROWICZ_BLOCK = "LichnerowiczBlock"
    RADIAL_H3 = "RadialH3"


class BoundaryCondition(str, enum.Enum):
    PERIODIC = "Periodic"
    DIRICHLET = "Dirichlet"


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[t_min, t_max]`` with ``(t_max - t_min)/h`` cells.

    Dirichlet operators act on the interior nodes; periodic operators on the
    nodes ``t_min + k h``, ``k = 0..cells-1``.
    """

    t_min: float = 0.0
    t_max: float = 12.0
    h: float = 0.05

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise InvalidParameterError(f"grid spacing must be positive, got {self.h}")
        if not self.t_max > self.t_min:
            raise InvalidParameterError(f"need t_max > t_min, got [{self.t_min}, {self.t_max}]")
        cells = (self.t_max - self.t_min) / self.h
        if abs(cells - round(cells)) > 1e-8 * max(cells, 1.0) or round(cells) < 3:
            raise InvalidParameterError(
                f"(t_max - t_min)/h = {cells:g} must be an integer >= 3"
            )

    @property
    def cells(self) -> int:
        return int(round((self.t_max - self.t_min) / self.h))

    @property
    def length(self) -> float:
        return self.t_max - self.t_min

    def nodes(self, bc: BoundaryCondition | str) -> np.ndarray:
        k = np.arange(1, self.cells) if BoundaryCondition(bc) is BoundaryCondition.DIRICHLET else np.arange(self.cells)
        return self.t_min + k * self.h

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid: ``t`` as in :class:`Grid1D`, ``theta`` periodic with ``theta_count`` nodes."""

    t: Grid1D = Grid1D()
    theta_count: int = 32
    theta_period: float = 2 * math.pi

    def __post_init__(self):
        if int(self.theta_count) != self.theta_count or self.theta_count < 3:
            raise InvalidParameterError("theta_count must be an integer >= 3")
        if not self.theta_period > 0:
            raise InvalidParameterError("theta_period must be positive")

    @property
    def h_theta(self) -> float:
        return self.theta_period / self.theta_count

    def theta_nodes(self) -> np.ndarray:
        return np.arange(self.theta_count) * self.h_theta

    def to_dict(self) -> dict:
        return {"t": self.t.to_dict(), "theta_count": self.theta_count, "theta_period": self.theta_period}


@dataclass(frozen=True)
class FourierSymbol:
    """Symbol of ``D2 + first D1 + zeroth`` with centred stencils of spacing ``h``."""

    first: complex
    zeroth: complex
    h: float

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        h = self.h
        return -(2 - 2 * np.cos(xi * h)) / h**2 + 1j * self.first * np.sin(xi * h) / h + self.zeroth

    def frequencies(self, count: int) -> np.ndarray:
        """``xi_k = 2 pi k / (count h)`` in FFT order."""
        return 2 * math.pi * np.fft.fftfreq(count, d=self.h)

    def eigenvalues(self, count: int) -> np.ndarray:
        return self(self.frequencies(count))


@dataclass(frozen=True)
class _Parts:
    principal: sp.csr_matrix
    z_van: sp.csr_matrix
    z_bdd: sp.csr_matrix
    rows_rho: np.ndarray
    van_row_sup: np.ndarray
    bdd_first_sup: float
    bdd_zeroth_sup: float
    nu: float | None


@dataclass(frozen=True)
class DiscreteOperator:
    kind: OperatorKind
    n: int
    mu: float
    grid: Grid1D | Grid2D
    matrix: sp.csr_matrix = field(repr=False)
    bc: BoundaryCondition
    coordinates: np.ndarray = field(repr=False)
    symbol: FourierSymbol | None = None
    block: Block | None = None
    metric: AHMetricSpec | None = None
    parts: _Parts | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise AssemblyError("operator matrix must be square")
        if self.coordinates.shape != (self.matrix.shape[0],):
            raise AssemblyError("one t-coordinate per unknown is required")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def t_max(self) -> float:
        g = self.grid.t if isinstance(self.grid, Grid2D) else self.grid
        return g.t_max

    @property
    def is_real(self) -> bool:
        return not np.any(self.matrix.data.imag)

    def describe(self) -> dict:
        return {
            "kind": self.kind.value,
            "block": self.block.value if self.block is not None else None,
            "n": self.n,
            "mu": self.mu,
            "bc": self.bc.value,
            "grid": self.grid.to_dict(),
            "dim": self.dim,
            "metric": self.metric.to_dict() if self.metric is not None else None,
        }

    @property
    def id(self) -> str:
        text = json.dumps(self.describe(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def scaled(self, c: float) -> "DiscreteOperator":
        """``c * A`` with the decomposition and symbol dropped."""
        return replace(self, matrix=(c * self.matrix).tocsr(), symbol=None, parts=None)

    def export_matrix_market(self, path) -> tuple[Path, Path]:
        """Write ``path`` (Matrix Market) and ``path.json`` (descriptor)."""
        path = Path(path)
        scipy.io.mmwrite(str(path), self.matrix)
        mtx = path if path.suffix == ".mtx" else path.with_name(path.name + ".mtx")
        side = mtx.with_suffix(".json")
        side.write_text(json.dumps(self.describe(), sort_keys=True, indent=2))
        return mtx, side


@dataclass(frozen=True)
class OperatorDecomposition:
    """``full = principal + z_van + z_bdd`` together with coefficient reports.

    Coefficients are measured on the 0-frame, so they do not depend on the
    grid spacing.  ``van_row_sup[i]`` is the largest second-order
    perturbation coefficient on the row ``rho = rows_rho[i]``.
    """

    principal: sp.csr_matrix
    z_van: sp.csr_matrix
    z_bdd: sp.csr_matrix
    rows_rho: np.ndarray
    van_row_sup: np.ndarray
    bdd_first_sup: float
    bdd_zeroth_sup: float
    nu: float | None

    @property
    def bdd_sup(self) -> float:
        return max(self.bdd_first_sup, self.bdd_zeroth_sup)

    @property
    def van_sup(self) -> float:
        return float(self.van_row_sup.max(initial=0.0))

    def van_decay_constant(self, nu: float | None = None) -> float:
        """``sup_rows van_row_sup / rho**nu``."""
        nu = self.nu if nu is None else nu
        if nu is None:
            return 0.0
        return float(np.max(self.van_row_sup / self.rows_rho**nu, initial=0.0))

    def van_decay_rate(self, floor: float = 1e-300) -> float:
        """Least-squares slope of ``log van_row_sup`` against ``log rho``."""
        mask = self.van_row_sup > floor
        if np.count_nonzero(mask) < 2:
            raise InvalidParameterError("z_van vanishes; no decay rate to fit")
        slope, _ = np.polyfit(np.log(self.rows_rho[mask]), np.log(self.van_row_sup[mask]), 1)
        return float(slope)

    def sum(self) -> sp.csr_matrix:
        return ((self.principal + self.z_van) + self.z_bdd).tocsr()


# --------------------------------------------------------------------------- stencils


def _stencils(cells: int, h: float, bc: BoundaryCondition) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Centred second and first difference matrices."""
    if bc is BoundaryCondition.DIRICHLET:
        m = cells - 1
        d2 = sp.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1], format="lil")
        d1 = sp.diags([-np.ones(m - 1), np.ones(m - 1)], [-1, 1], format="lil")
    else:
        m = cells
        d2 = sp.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1], format="lil")
        d1 = sp.diags([-np.ones(m - 1), np.ones(m - 1)], [-1, 1], format="lil")
        d2[0, m - 1] += 1.0
        d2[m - 1, 0] += 1.0
        d1[0, m - 1] -= 1.0
        d1[m - 1, 0] += 1.0
    return (d2.tocsr() / h**2).astype(complex), (d1.tocsr() / (2 * h)).astype(complex)


def _identity(m: int) -> sp.csr_matrix:
    return sp.identity(m, dtype=complex, format="csr")


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise InvalidParameterError(f"dimension must be an integer >= 2, got {n!r}")
    return int(n)


def _assemble_model_1d(kind, n, mu, grid, bc, constant, block) -> DiscreteOperator:
    if not isinstance(grid, Grid1D):
        raise InvalidParameterError("one-dimensional assembly needs a Grid1D")
    n = _check_n(n)
    mu = float(mu)
    bc = BoundaryCondition(bc)
    d2, d1 = _stencils(grid.cells, grid.h, bc)
    first = n - 1 - 2 * mu
    zeroth = mu * mu - (n - 1) * mu + constant
    m = d2.shape[0]
    principal = d2
    z_van = sp.csr_matrix((m, m), dtype=complex)
    z_bdd = (first * d1 + zeroth * _identity(m)).tocsr()
    matrix = ((principal + z_van) + z_bdd).tocsr()
    t = grid.nodes(bc)
    parts = _Parts(
        principal=principal,
        z_van=z_van,
        z_bdd=z_bdd,
        rows_rho=np.exp(-t),
        van_row_sup=np.zeros(m),
        bdd_first_sup=abs(first),
        bdd_zeroth_sup=abs(zeroth),
        nu=None,
    )
    symbol = FourierSymbol(first=first, zeroth=zeroth, h=grid.h) if bc is BoundaryCondition.PERIODIC else None
    return DiscreteOperator(
        kind=kind, n=n, mu=mu, grid=grid, matrix=matrix, bc=bc, coordinates=t, symbol=symbol, block=block, parts=parts
    )


def assemble_scalar_1d(n: int, mu: float, grid: Grid1D = Grid1D(), bc: BoundaryCondition | str = "Dirichlet") -> DiscreteOperator:
    """Conjugated scalar model ``u'' + (n-1-2mu) u' + (mu^2 - (n-1) mu) u``."""
    return _assemble_model_1d(OperatorKind.SCALAR_1D, n, mu, grid, bc, 0.0, None)


def assemble_lichnerowicz_block(
    block: Block | str, n: int, mu: float, grid: Grid1D = Grid1D(), bc: BoundaryCondition | str = "Dirichlet"
) -> DiscreteOperator:
    """Conjugated model block: the scalar model plus the constant ``-b(block)``."""
    block = Block(block)
    if block is Block.SCALAR:
        raise InvalidParameterError("use assemble_scalar_1d for the scalar operator")
    b = block_constant(block, _check_n(n))
    return _assemble_model_1d(OperatorKind.LICHNEROWICZ_BLOCK, n, mu, grid, bc, -float(b), block)


def assemble_radial_h3(r_max: float = 12.0, h: float = 0.05) -> DiscreteOperator:
    """Radial Laplacian ``f'' + 2 coth(r) f'`` of hyperbolic 3-space.

    Unknowns sit at ``r = 0, h, ..., r_max - h`` with ``f(r_max) = 0``.  At the
    origin the regular limit ``3 f''(0)`` is used.
    """
    grid = Grid1D(0.0, r_max, h)
    m = grid.cells
    r = np.arange(m) * h
    d2 = sp.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1], format="lil") / h**2
    d1 = sp.diags([-np.ones(m - 1), np.ones(m - 1)], [-1, 1], format="lil") / (2 * h)
    coth = np.zeros(m)
    coth[1:] = 1.0 / np.tanh(r[1:])
    a = (d2 + sp.diags(2 * coth) @ d1).tolil()
    a[0, :] = 0.0
    a[0, 0] = -6.0 / h**2
    a[0, 1] = 6.0 / h**2
    return DiscreteOperator(
        kind=OperatorKind.RADIAL_H3,
        n=3,
        mu=0.0,
        grid=grid,
        matrix=a.tocsr().astype(complex),
        bc=BoundaryCondition.DIRICHLET,
        coordinates=r,
    )


# --------------------------------------------------------------------------- two-dimensional collar operator


def _frame_coefficients(spec: AHMetricSpec, t: np.ndarray, theta: np.ndarray):
    """Inverse-metric data on the ``(t, theta)`` tensor grid.

    Returns ``Ginv - I`` on the 0-frame and its ``t``/``theta`` derivatives,
    plus the derivatives of ``log sqrt(det G)``.
    """
    T, TH = np.meshgrid(t, theta, indexing="ij")
    beta, dbeta = spec.profile_values(TH)
    decay = spec.amplitude * np.exp(-spec.nu * T)
    p = decay * beta
    E = spec.pattern
    # G = I + p E, components
    g00 = 1 + p * E[0, 0]
    g01 = p * E[0, 1]
    g11 = 1 + p * E[1, 1]
    det = g00 * g11 - g01 * g01
    if np.any(det <= 0) or np.any(np.minimum(g00, g11) <= 0):
        raise AssemblyError("perturbed metric loses positivity on the grid; reduce the amplitude")
    inv = np.empty(T.shape + (2, 2))
    inv[..., 0, 0] = g11 / det
    inv[..., 1, 1] = g00 / det
    inv[..., 0, 1] = inv[..., 1, 0] = -g01 / det
    # Ginv - I = -Ginv (G - I) = -p Ginv E, exact even when p is tiny
    pert = -p[..., None, None] * (inv @ E)
    dG_t = (-spec.nu * p)[..., None, None] * E
    dG_th = (decay * dbeta)[..., None, None] * E
    dinv_t = -inv @ dG_t @ inv
    dinv_th = -inv @ dG_th @ inv
    dlogsqrt_t = 0.5 * np.einsum("...ij,...ji->...", inv, dG_t)
    dlogsqrt_th = 0.5 * np.einsum("...ij,...ji->...", inv, dG_th)
    return T, inv, pert, dinv_t, dinv_th, dlogsqrt_t, dlogsqrt_th


def assemble_scalar_2d(
    spec: AHMetricSpec,
    mu: float,
    grid2d: Grid2D = Grid2D(),
    bc: BoundaryCondition | str = "Dirichlet",
) -> DiscreteOperator:
    """Conjugated Laplacian of the perturbed collar metric on ``(t, theta^1)``.

    Functions are taken independent of the remaining boundary directions.
    With ``P_mu u = exp(mu t) Lap(exp(-mu t) u)`` and coordinate inverse metric
    ``g^{ab}``, the operator is

        g^tt u_tt + 2 g^tθ u_tθ + g^θθ u_θθ
        + (b^t - 2 mu g^tt) u_t + (b^θ - 2 mu g^tθ) u_θ + (mu^2 g^tt - mu b^t) u

    with ``b^a = d_c g^{ca} + g^{ca} d_c log(sqrt(det g))``.
    """
    if spec.boundary_metric != "FlatTorus":
        raise InvalidParameterError("two-dimensional assembly supports the FlatTorus boundary only")
    if not isinstance(grid2d, Grid2D):
        raise InvalidParameterError("assemble_scalar_2d needs a Grid2D")
    if abs(grid2d.theta_period - spec.period) > 1e-12 * spec.period:
        raise InvalidParameterError("theta_period of the grid must equal the torus period")
    bc = BoundaryCondition(bc)
    mu = float(mu)
    n = spec.n
    tg = grid2d.t
    t = tg.nodes(bc)
    if t.min() < -math.log(spec.collar_extent) - 1e-12:
        raise InvalidParameterError("grid extends beyond the collar")
    window = fredholm_weight_window(BlockSet.SCALAR_ONLY, n, 0.0)
    if not window.contains(mu):
        warnings.warn(f"mu={mu} lies outside the Fredholm window ({window.mu_min}, {window.mu_max})", stacklevel=2)

    theta = grid2d.theta_nodes()
    T, inv, pert, dinv_t, dinv_th, dls_t, dls_th = _frame_coefficients(spec, t, theta)
    e1, e2 = np.exp(-T), np.exp(-2 * T)

    # coordinate inverse metric and its perturbation from the model
    g_tt = inv[..., 0, 0]
    g_tth = -inv[..., 0, 1] * e1
    g_thth = inv[..., 1, 1] * e2
    van_tt = pert[..., 0, 0]
    van_tth = -pert[..., 0, 1] * e1
    van_thth = pert[..., 1, 1] * e2

    dl_t = dls_t + (n - 1)
    dl_th = dls_th
    d_t_gtt = dinv_t[..., 0, 0]
    d_th_gtth = -dinv_th[..., 0, 1] * e1
    d_t_gtth = -(dinv_t[..., 0, 1] - inv[..., 0, 1]) * e1
    d_th_gthth = dinv_th[..., 1, 1] * e2
    b_t = d_t_gtt + d_th_gtth + g_tt * dl_t + g_tth * dl_th
    b_th = d_t_gtth + d_th_gthth + g_tth * dl_t + g_thth * dl_th

    c_t = b_t - 2 * mu * g_tt
    c_th = b_th - 2 * mu * g_tth
    c_0 = mu * mu * g_tt - mu * b_t

    d2t, d1t = _stencils(tg.cells, tg.h, bc)
    d2y, d1y = _stencils(grid2d.theta_count, grid2d.h_theta, BoundaryCondition.PERIODIC)
    it, iy = _identity(d2t.shape[0]), _identity(grid2d.theta_count)
    Dtt = sp.kron(d2t, iy, format="csr")
    Dt = sp.kron(d1t, iy, format="csr")
    Dyy = sp.kron(it, d2y, format="csr")
    Dy = sp.kron(it, d1y, format="csr")
    Dty = sp.kron(d1t, d1y, format="csr")

    def diag(a):
        return sp.diags(np.ravel(a).astype(complex), format="csr")

    principal = (Dtt + diag(e2) @ Dyy).tocsr()
    z_van = (diag(van_tt) @ Dtt + diag(2 * van_tth) @ Dty + diag(van_thth) @ Dyy).tocsr()
    z_bdd = (diag(c_t) @ Dt + diag(c_th) @ Dy + diag(c_0)).tocsr()
    matrix = ((principal + z_van) + z_bdd).tocsr()

    # 0-frame coefficient sizes: rho d_theta carries a factor exp(-t)
    van_frame = np.max(np.abs(pert.reshape(pert.shape[:2] + (4,))), axis=(1, 2))
    first_frame = np.maximum(np.abs(c_t), np.abs(c_th / e1))
    parts = _Parts(
        principal=principal,
        z_van=z_van,
        z_bdd=z_bdd,
        rows_rho=np.exp(-t),
        van_row_sup=van_frame,
        bdd_first_sup=float(first_frame.max()),
        bdd_zeroth_sup=float(np.abs(c_0).max()),
        nu=spec.nu,
    )
    return DiscreteOperator(
        kind=OperatorKind.SCALAR_2D,
        n=n,
        mu=mu,
        grid=grid2d,
        matrix=matrix,
        bc=bc,
        coordinates=np.repeat(t, grid2d.theta_count),
        metric=spec,
        parts=parts,
    )


# --------------------------------------------------------------------------- conjugation and decomposition


def _similarity(a: sp.spmatrix, t: np.ndarray, sigma: float) -> sp.csr_matrix:
    coo = sp.coo_matrix(a)
    data = coo.data * np.exp(sigma * (t[coo.row] - t[coo.col]))
    return sp.csr_matrix((data, (coo.row, coo.col)), shape=a.shape)


def conjugate_by_weight(op: DiscreteOperator, sigma: float) -> DiscreteOperator:
    """``rho**-sigma A rho**sigma``, i.e. ``D^-1 A D`` with ``D = diag(exp(-sigma t_i))``.

    The exact diagonal similarity leaves the spectrum unchanged.  Periodic
    operators lose their Fourier symbol because the wrap-around entries pick
    up the factor ``exp(+-sigma L)``.
    """
    sigma = float(sigma)
    t = op.coordinates
    reach = float(np.max(np.abs(t))) if t.size else 0.0
    if abs(sigma) * max(reach, op.t_max) > 700:
        raise RangeError(f"|sigma| t_max = {abs(sigma) * max(reach, op.t_max):.1f} overflows the weight (limit 700)")
    if sigma == 0.0:
        return replace(op)
    parts = op.parts
    if parts is not None:
        principal = _similarity(parts.principal, t, sigma)
        z_van = _similarity(parts.z_van, t, sigma)
        z_bdd = _similarity(parts.z_bdd, t, sigma)
        matrix = ((principal + z_van) + z_bdd).tocsr()
        parts = replace(parts, principal=principal, z_van=z_van, z_bdd=z_bdd)
    else:
        matrix = _similarity(op.matrix, t, sigma)
    return replace(op, mu=op.mu + sigma, matrix=matrix, symbol=None, parts=parts)


def decompose_operator(op: DiscreteOperator, reference: AHMetricSpec) -> OperatorDecomposition:
    """Split ``op`` into the 0-Laplacian, the decaying second-order remainder
    and the bounded lower-order remainder.

    One-dimensional models are compared against an unperturbed reference of
    the same dimension; their ``z_van`` is identically zero.
    """
    if op.parts is None:
        raise InvalidParameterError("operator carries no decomposition (it was rescaled or built externally)")
    if op.kind is OperatorKind.SCALAR_2D:
        if op.metric != reference:
            raise InvalidParameterError("reference metric does not match the one the operator was assembled from")
    else:
        if reference.n != op.n or reference.amplitude != 0:
            raise InvalidParameterError("one-dimensional models correspond to an unperturbed reference of equal n")
    p = op.parts
    return OperatorDecomposition(
        principal=p.principal,
        z_van=p.z_van,
        z_bdd=p.z_bdd,
        rows_rho=p.rows_rho,
        van_row_sup=p.van_row_sup,
        bdd_first_sup=p.bdd_first_sup,
        bdd_zeroth_sup=p.bdd_zeroth_sup,
        nu=p.nu,
    )


# --------------------------------------------------------------------------- symmetrisation and lambda_0


def symmetrizer(op: DiscreteOperator, rtol: float = 1e-10) -> np.ndarray:
    """Positive weights ``w`` with ``diag(w) A`` symmetric.

    Weights propagate along a spanning tree of the sparsity graph via
    ``w_j / w_i = A_ij / A_ji``; every remaining edge is then verified, which
    detects graph cycles (e.g. periodic wrap-around) that forbid a diagonal
    symmetriser.
    """
    a = op.matrix
    if np.any(a.data.imag != 0):
        raise SymmetrizationError(
            "complex operator has no real diagonal symmetrizer; estimate the spectral abscissa instead"
        )
    a = sp.csr_matrix(a.real)
    a.eliminate_zeros()
    at = a.T.tocsr()
    pattern_mismatch = (a != 0).astype(int) - (at != 0).astype(int)
    if pattern_mismatch.count_nonzero():
        raise SymmetrizationError("sparsity pattern is not symmetric; estimate the spectral abscissa instead")
    m = a.shape[0]
    logw = np.full(m, np.nan)
    for root in range(m):
        if not np.isnan(logw[root]):
            continue
        logw[root] = 0.0
        stack = [root]
        while stack:
            i = stack.pop()
            row = a.getrow(i)
            for j, aij in zip(row.indices, row.data):
                if j == i or not np.isnan(logw[j]):
                    continue
                aji = at[i, j]
                ratio = aij / aji
                if ratio <= 0:
                    raise SymmetrizationError(
                        f"entries ({i},{j}) and ({j},{i}) differ in sign; estimate the spectral abscissa instead"
                    )
                logw[j] = logw[i] + math.log(ratio)
                stack.append(j)
    logw -= logw.max()
    coo = a.tocoo()
    lhs = coo.data * np.exp(0.5 * (logw[coo.row] - logw[coo.col]))
    s = sp.csr_matrix((lhs, (coo.row, coo.col)), shape=a.shape)
    asym = abs(s - s.T).max() if s.nnz else 0.0
    if asym > rtol * max(abs(s).max(), 1.0):
        raise SymmetrizationError(
            "operator admits no diagonal symmetrizer (non-trivial cycle product); estimate the spectral abscissa instead"
        )
    return np.exp(logw)


def symmetrized_residual(op: DiscreteOperator, weights: np.ndarray) -> float:
    """``max |A - D^-1 A^T D|`` for ``D = diag(weights)``."""
    a = op.matrix
    d = sp.diags(weights)
    dinv = sp.diags(1.0 / weights)
    r = a - dinv @ a.T @ d
    return float(abs(r).max()) if r.nnz else 0.0


def _symmetrized(op: DiscreteOperator) -> sp.csr_matrix:
    w = symmetrizer(op)
    coo = sp.coo_matrix(op.matrix.real)
    data = coo.data * np.sqrt(w[coo.row] / w[coo.col])
    s = sp.csr_matrix((data, (coo.row, coo.col)), shape=coo.shape)
    return ((s + s.T) * 0.5).tocsr()


def estimate_lambda0(op: DiscreteOperator, tol: float = 1e-8) -> float:
    """Largest Rayleigh quotient of ``A`` in its symmetrising inner product.

    Computed as the top eigenvalue of ``D^{1/2} A D^{-1/2}`` by Lanczos (dense
    symmetric eigensolve for small matrices).
    """
    s = _symmetrized(op)
    if s.shape[0] <= DENSE_EIG_CAP:
        return float(np.linalg.eigvalsh(s.toarray())[-1])
    val = spla.eigsh(s, k=1, which="LA", tol=tol, return_eigenvectors=False)
    return float(val[0])
