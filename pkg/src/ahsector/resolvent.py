"""Shifted solves, resolvent norms and sector sweeps."""

from __future__ import annotations

import csv
import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionCapError, InvalidParameterError, NearSpectrumError, SymmetrizationError
from .operators import DiscreteOperator, estimate_lambda0
from .sectors import SectorSpec, interior_ray_angles, sector_contains

__all__ = [
    "NormKind",
    "ShiftedSolver",
    "solve_shifted",
    "resolvent_norm",
    "resolvent_matrix",
    "SweepSample",
    "ResolventSweepResult",
    "sector_sweep",
    "discrete_spectrum",
    "resolvent_identity_check",
]

CONDITION_LIMIT = 1e12
DENSE_SVD_CAP = 500
DENSE_CAP = 2000
VERTEX_MARGIN = 0.1


class NormKind(str, enum.Enum):
    SPECTRAL = "Spectral"
    WEIGHTED_SUP = "WeightedSup"


class ShiftedSolver:
    """Sparse LU of ``shift I - A`` reusable across right-hand sides.

    Each solve applies iterative refinement until the residual drops below
    ``rtol * ||rhs||``.
    """

    def __init__(self, op: DiscreteOperator | sp.spmatrix, shift: complex, rtol: float = 1e-10):
        a = op.matrix if isinstance(op, DiscreteOperator) else sp.csr_matrix(op)
        self.shift = complex(shift)
        self.rtol = rtol
        m = a.shape[0]
        self.matrix = (self.shift * sp.identity(m, dtype=complex, format="csc") - a.astype(complex)).tocsc()
        try:
            self._lu = spla.splu(self.matrix)
        except RuntimeError as exc:  # exactly singular factor
            raise NearSpectrumError(self.shift, math.inf) from exc
        diag_u = np.abs(self._lu.U.diagonal())
        if not np.all(np.isfinite(diag_u)) or diag_u.min() == 0:
            raise NearSpectrumError(self.shift, math.inf)
        self.condition = self._condition_estimate()
        if not self.condition <= CONDITION_LIMIT:
            raise NearSpectrumError(self.shift, self.condition)

    def _condition_estimate(self) -> float:
        m = self.matrix.shape[0]
        inv = spla.LinearOperator(
            (m, m),
            matvec=lambda x: self._lu.solve(np.asarray(x, dtype=complex).ravel()),
            rmatvec=lambda x: self._lu.solve(np.asarray(x, dtype=complex).ravel(), trans="H"),
            dtype=complex,
        )
        norm_inv = math.nan
        if m > 4:
            # far-off shifts give inverses with subnormal tails that trip the sign rounding
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                norm_inv = float(spla.onenormest(inv))
        if not math.isfinite(norm_inv):
            if m > DENSE_CAP:
                return math.inf
            norm_inv = np.abs(np.linalg.inv(self.matrix.toarray())).sum(axis=0).max()
        return float(spla.norm(self.matrix, 1) * norm_inv)

    def solve(self, rhs, trans: str = "N") -> np.ndarray:
        rhs = np.asarray(rhs, dtype=complex)
        if rhs.shape[0] != self.matrix.shape[0]:
            raise InvalidParameterError(f"rhs has length {rhs.shape[0]}, operator has dimension {self.matrix.shape[0]}")
        mat = self.matrix if trans == "N" else self.matrix.conj().T
        x = self._lu.solve(rhs, trans=trans)
        target = self.rtol * np.linalg.norm(rhs)
        for _ in range(3):
            r = rhs - mat @ x
            if np.linalg.norm(r) <= target:
                return x
            x = x + self._lu.solve(r, trans=trans)
        if np.linalg.norm(rhs - mat @ x) > target:
            raise NearSpectrumError(self.shift, self.condition, "iterative refinement did not reach the residual target")
        return x


def solve_shifted(op: DiscreteOperator, lam: complex, rhs) -> np.ndarray:
    """``x`` with ``(lam I - A) x = rhs``."""
    return ShiftedSolver(op, lam).solve(rhs)


def _dense_shifted(op: DiscreteOperator, lam: complex) -> np.ndarray:
    m = op.dim
    return complex(lam) * np.eye(m) - op.matrix.toarray()


def resolvent_matrix(op: DiscreteOperator, lam: complex) -> np.ndarray:
    """Dense ``(lam I - A)^-1`` (dimension capped)."""
    if op.dim > DENSE_CAP:
        raise DimensionCapError(f"dense resolvent needs dimension <= {DENSE_CAP}, got {op.dim}")
    M = _dense_shifted(op, lam)
    try:
        lu = sla.lu_factor(M, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NearSpectrumError(lam, math.inf) from exc
    if np.any(np.diag(lu[0]) == 0):
        raise NearSpectrumError(lam, math.inf)
    R = sla.lu_solve(lu, np.eye(op.dim, dtype=complex), check_finite=False)
    cond = np.abs(M).sum(axis=0).max() * np.abs(R).sum(axis=0).max()
    if not cond <= CONDITION_LIMIT:
        raise NearSpectrumError(lam, cond)
    return R


def resolvent_norm(
    op: DiscreteOperator,
    lam: complex,
    norm_kind: NormKind | str = NormKind.SPECTRAL,
    weight: float | None = None,
    method: str = "auto",
) -> float:
    """Operator norm of ``(lam I - A)^-1``.

    Parameters
    ----------
    norm_kind
        ``Spectral`` is the Euclidean operator norm.  ``WeightedSup`` is the
        induced max-norm ``max_i sum_j |R_ij|``.
    weight
        For ``WeightedSup`` only: measure in ``||u|| = max_i |exp(weight t_i) u_i|``,
        the discrete ``rho**weight``-weighted sup norm.
    method
        ``auto`` uses a dense SVD up to dimension 500 and Lanczos on
        ``R^H R`` above; ``dense`` and ``iterative`` force one of the two.
    """
    kind = NormKind(norm_kind)
    if kind is NormKind.WEIGHTED_SUP:
        R = resolvent_matrix(op, lam)
        if weight:
            t = op.coordinates
            R = R * np.exp(weight * (t[:, None] - t[None, :]))
        return float(np.abs(R).sum(axis=1).max())
    if weight:
        raise InvalidParameterError("weights apply to the WeightedSup norm only")
    if method not in ("auto", "dense", "iterative"):
        raise InvalidParameterError(f"unknown method {method!r}")
    if method == "dense" or (method == "auto" and op.dim <= DENSE_SVD_CAP):
        s = sla.svdvals(_dense_shifted(op, lam), check_finite=False)
        if s[-1] == 0 or s[0] / s[-1] > CONDITION_LIMIT:
            raise NearSpectrumError(lam, math.inf if s[-1] == 0 else s[0] / s[-1])
        return float(1.0 / s[-1])
    solver = ShiftedSolver(op, lam)
    m = op.dim
    rhr = spla.LinearOperator((m, m), matvec=lambda x: solver.solve(solver.solve(x), trans="H"), dtype=complex)
    v0 = np.ones(m, dtype=complex)
    val = spla.eigsh(rhr, k=1, which="LM", tol=1e-6, v0=v0, return_eigenvectors=False)
    return float(math.sqrt(abs(val[0])))


# --------------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepSample:
    ray: str
    lam: complex
    norm_spectral: float | None
    norm_sup: float | None
    product: float
    near_spectrum: bool = False


@dataclass(frozen=True)
class ResolventSweepResult:
    operator_id: str
    sector: SectorSpec
    samples: tuple[SweepSample, ...]
    empirical_C: float
    norm_kind_used: NormKind
    s1_violated: bool
    offending: tuple[complex, ...] = ()
    eigenvalues_in_sector: tuple[complex, ...] = ()
    lambda0: float | None = None
    vertex_check: bool | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def rays(self) -> dict[str, list[SweepSample]]:
        out: dict[str, list[SweepSample]] = {}
        for s in self.samples:
            out.setdefault(s.ray, []).append(s)
        return out

    def norm_of(self, s: SweepSample) -> float | None:
        return s.norm_spectral if self.norm_kind_used is NormKind.SPECTRAL else s.norm_sup

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda_re", "lambda_im", "norm", "product", "ray"])
            for s in self.samples:
                norm = self.norm_of(s)
                w.writerow([repr(float(s.lam.real)), repr(float(s.lam.imag)), repr(float(norm) if norm is not None else math.inf), repr(float(s.product)), s.ray])

    def summary(self, config_hash: str | None = None) -> dict:
        return {
            "operator_id": self.operator_id,
            "sector": self.sector.to_dict(),
            "empirical_C": self.empirical_C if math.isfinite(self.empirical_C) else "inf",
            "s1_violated": self.s1_violated,
            "offending": [[z.real, z.imag] for z in self.offending],
            "eigenvalues_in_sector": [[z.real, z.imag] for z in self.eigenvalues_in_sector],
            "norm_kind": self.norm_kind_used.value,
            "samples": len(self.samples),
            "lambda0": self.lambda0,
            "vertex_check": self.vertex_check,
            "config_hash": config_hash,
        }

    def to_json(self, path, config_hash: str | None = None) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(config_hash), fh, indent=2, sort_keys=True)


def _ray_table(sector: SectorSpec) -> list[tuple[str, float]]:
    a0, a1, a2 = interior_ray_angles(sector)
    return [
        ("boundary_upper", sector.opening),
        ("boundary_lower", -sector.opening),
        ("interior_axis", a0),
        ("interior_upper", a1),
        ("interior_lower", a2),
    ]


def sector_sweep(
    op: DiscreteOperator,
    sector: SectorSpec,
    r_range: tuple[float, float] = (1e-1, 1e5),
    counts: int = 200,
    norm_kind: NormKind | str = NormKind.SPECTRAL,
    report_both: bool = False,
    workers: int = 1,
    check_eigenvalues: bool = True,
) -> ResolventSweepResult:
    """Sample ``|lam - omega| ||(lam - A)^-1||`` over five rays of the sector.

    The rays are the two boundary rays and the interior rays at angles
    ``0, +-pi/4 (1 + 2 delta/pi)``, each with ``counts`` log-spaced radii in
    ``r_range``.  Near-spectrum samples are recorded, not raised, and mark the
    result ``s1_violated``; for dense-sized operators any eigenvalue inside
    the sector does the same.
    """
    kind = NormKind(norm_kind)
    r_min, r_max = r_range
    if not (0 < r_min <= r_max):
        raise InvalidParameterError(f"need 0 < r_min <= r_max, got {r_range}")
    if counts < 1:
        raise InvalidParameterError("counts must be positive")
    radii = np.geomspace(r_min, r_max, int(counts))
    omega = sector.vertex
    tasks = [(name, omega + r * complex(math.cos(phi), math.sin(phi))) for name, phi in _ray_table(sector) for r in radii]
    kinds = [NormKind.SPECTRAL, NormKind.WEIGHTED_SUP] if report_both else [kind]

    def evaluate(task):
        name, lam = task
        lam = complex(lam)
        values = {}
        try:
            for k in kinds:
                values[k] = float(resolvent_norm(op, lam, k))
        except NearSpectrumError:
            return SweepSample(name, lam, None, None, math.inf, near_spectrum=True)
        product = float(abs(lam - omega) * values[kind])
        return SweepSample(name, lam, values.get(NormKind.SPECTRAL), values.get(NormKind.WEIGHTED_SUP), product)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            samples = tuple(pool.map(evaluate, tasks))
    else:
        samples = tuple(map(evaluate, tasks))

    offending = tuple(s.lam for s in samples if s.near_spectrum)
    inside: tuple[complex, ...] = ()
    if check_eigenvalues and op.dim <= DENSE_CAP:
        inside = tuple(complex(z) for z in discrete_spectrum(op) if sector_contains(sector, z))
    lambda0 = None
    vertex_ok = None
    try:
        lambda0 = estimate_lambda0(op)
        vertex_ok = bool(omega.real >= lambda0 + VERTEX_MARGIN)
    except SymmetrizationError:
        pass
    return ResolventSweepResult(
        operator_id=op.id,
        sector=sector,
        samples=samples,
        empirical_C=max(s.product for s in samples),
        norm_kind_used=kind,
        s1_violated=bool(offending or inside),
        offending=offending,
        eigenvalues_in_sector=inside,
        lambda0=lambda0,
        vertex_check=vertex_ok,
        meta={"r_range": [r_min, r_max], "counts": int(counts)},
    )


def discrete_spectrum(op: DiscreteOperator) -> np.ndarray:
    """All eigenvalues of the operator matrix, sorted by real then imaginary part."""
    if op.dim > DENSE_CAP:
        raise DimensionCapError(
            f"dense eigensolve is capped at dimension {DENSE_CAP} (got {op.dim}); iterative mode is not provided"
        )
    ev = np.linalg.eigvals(op.matrix.toarray())
    return ev[np.lexsort((ev.imag, ev.real))]


def resolvent_identity_check(
    op: DiscreteOperator, lambda1: complex, lambda2: complex, norm_kind: NormKind | str = NormKind.SPECTRAL
) -> float:
    """``||R1 - R2 - (lambda2 - lambda1) R1 R2||`` in the chosen norm."""
    R1 = resolvent_matrix(op, lambda1)
    R2 = R1 if complex(lambda1) == complex(lambda2) else resolvent_matrix(op, lambda2)
    E = R1 - R2 - (complex(lambda2) - complex(lambda1)) * (R1 @ R2)
    if NormKind(norm_kind) is NormKind.SPECTRAL:
        return float(np.linalg.norm(E, 2))
    return float(np.abs(E).sum(axis=1).max())
