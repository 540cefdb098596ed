"""Acceptance checks, runnable from the test-suite and from the CLI.

Each check returns a :class:`CriterionResult`; none of them raises on a
failed comparison, so a full run always reports every criterion.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import AHMetricSpec
from .indicial import (
    Block,
    BlockSet,
    block_constant,
    block_indicial_poly,
    brute_force_roots,
    fredholm_weight_window,
    indicial_radius,
    lichnerowicz_indicial_roots,
    scalar_indicial_roots,
)
from .operators import (
    Grid1D,
    Grid2D,
    assemble_lichnerowicz_block,
    assemble_scalar_1d,
    assemble_scalar_2d,
    conjugate_by_weight,
    decompose_operator,
    estimate_lambda0,
)
from .resolvent import NormKind, discrete_spectrum, resolvent_norm, sector_sweep
from .sectors import SectorSpec, max_sector_halfangle_excess, sector_inf_re_sqrt
from .semigroup import (
    apply_semigroup,
    build_contour,
    fourier_semigroup,
    h3_bump_cross_check,
    h3_kernel_pde_residual,
    reference_step,
)

__all__ = ["CriterionResult", "CHECKS", "run_acceptance"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    seconds: float = 0.0
    budget: float = math.inf
    details: dict = field(default_factory=dict)

    @property
    def within_budget(self) -> bool:
        return self.seconds <= self.budget

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:>2}. {self.title}: {self.summary} ({self.seconds:.2f}s / {self.budget:g}s)"


def _fit_order(hs, errs) -> float:
    slope, _ = np.polyfit(np.log(hs), np.log(errs), 1)
    return float(slope)


# --------------------------------------------------------------------------- 1


def check_indicial_exactness() -> CriterionResult:
    worst_scalar = 0.0
    worst_radius = 0.0
    worst_block = 0.0
    rng = np.random.default_rng(1)
    lams = [0.0, 1.0, -0.3, 2.5 + 1.5j, -1.0 - 4.0j] + list(rng.normal(size=5) * 3 + 1j * rng.normal(size=5) * 3)
    for n in range(2, 9):
        lo, hi = scalar_indicial_roots(n, 0.0)
        worst_scalar = max(worst_scalar, abs(lo - 0.0), abs(hi - (n - 1)))
        worst_radius = max(worst_radius, abs(indicial_radius(BlockSet.SCALAR_ONLY, n) - (n - 1) / 2))
        for lam in lams:
            pairs = lichnerowicz_indicial_roots(n, lam)
            for block, pair in zip((Block.V1, Block.V2, Block.V3, Block.TRACE), pairs):
                brute = brute_force_roots(block_indicial_poly(block, n, lam))
                mine = np.array(list(pair))
                # pair roots up in whichever order matches best
                err = min(np.max(np.abs(mine - brute)), np.max(np.abs(mine - brute[::-1])))
                worst_block = max(worst_block, float(err))
    worst = max(worst_scalar, worst_radius, worst_block)
    return CriterionResult(
        1,
        "indicial exactness",
        worst <= 1e-12,
        f"scalar roots err {worst_scalar:.1e}, radius err {worst_radius:.1e}, block roots vs companion {worst_block:.1e} (tol 1e-12)",
        budget=1.0,
        details={"scalar": worst_scalar, "radius": worst_radius, "blocks": worst_block},
    )


# --------------------------------------------------------------------------- 2


def check_fredholm_window(samples: int = 1000) -> CriterionResult:
    exact = all(
        (w := fredholm_weight_window(BlockSet.SCALAR_ONLY, n, 0.0)).mu_min == 0.0 and w.mu_max == n - 1
        for n in range(2, 9)
    )
    rng = np.random.default_rng(7)
    failures = 0
    total = 0
    for n, mu in ((2, 0.5), (3, 0.4), (3, 1.0), (3, 1.7), (5, 1.0), (8, 3.5)):
        # half of the largest eps for which (1 - eps)(n - 1)/2 still reaches mu
        eps = min(mu, n - 1 - mu) / (n - 1)
        delta = max_sector_halfangle_excess(n - 1, eps).delta
        r = np.exp(rng.uniform(math.log(1e-3), math.log(1e4), samples))
        phi = rng.uniform(-1, 1, samples) * (math.pi / 2 + delta)
        for lam in r * np.exp(1j * phi):
            w = fredholm_weight_window(BlockSet.SCALAR_ONLY, n, lam)
            total += 1
            failures += int(w.empty or not w.contains(mu))
    return CriterionResult(
        2,
        "Fredholm window",
        exact and failures == 0,
        f"window at lambda=0 exact: {exact}; {failures}/{total} sector samples lost mu",
        budget=5.0,
        details={"exact": exact, "failures": failures, "samples": total},
    )


# --------------------------------------------------------------------------- 3


def check_sector_certification() -> CriterionResult:
    ok = True
    rows = []
    for A in (1.0, 2.0, 5.0):
        prev = -1.0
        for eps in (0.1, 0.3, 0.5):
            cert = max_sector_halfangle_excess(A, eps)
            recheck = sector_inf_re_sqrt(A, cert.delta, cert.grid.scaled(4))
            good = cert.delta > 0 and recheck > cert.threshold and cert.delta >= prev
            ok &= good
            prev = cert.delta
            rows.append((A, eps, cert.delta, recheck - cert.threshold))
    margin = min(r[3] for r in rows)
    return CriterionResult(
        3,
        "sector certification",
        bool(ok),
        f"9 certificates, min 4x-recheck margin {margin:.2e}, deltas monotone in eps",
        budget=30.0,
        details={"rows": rows},
    )


# --------------------------------------------------------------------------- 4


def check_spectral_ray() -> CriterionResult:
    hs = (0.1, 0.05, 0.025)
    gaps = []
    for h in hs:
        # the truncation error behaves like (pi / t_max)^2, so t_max is refined with h
        t_max = round(0.8 / h, 12)
        op = assemble_scalar_1d(3, 1.0, Grid1D(0.0, t_max, h), "Dirichlet")
        top = float(discrete_spectrum(op).real.max())
        gaps.append(abs(top + 1.0))
    order = _fit_order(hs, gaps)
    return CriterionResult(
        4,
        "spectral ray",
        order >= 1.8 and gaps[-1] <= 0.02,
        f"gaps {', '.join(f'{g:.4f}' for g in gaps)}; order {order:.2f} (>= 1.8), final gap <= 0.02",
        budget=60.0,
        details={"h": hs, "gaps": gaps, "order": order},
    )


# --------------------------------------------------------------------------- 5


def _symbol_products(op, samples, omega=0.0):
    sigma = op.symbol.eigenvalues(op.dim)
    return np.array([abs(s.lam - omega) / np.min(np.abs(s.lam - sigma)) for s in samples])


def check_resolvent_estimate(counts: int = 200, workers: int = 1) -> CriterionResult:
    op = assemble_scalar_1d(3, 1.0, Grid1D(), "Periodic")
    delta = max_sector_halfangle_excess(2.0, 0.5).delta
    sector = SectorSpec(0.0, delta)
    res = sector_sweep(op, sector, (1e-1, 1e5), counts, workers=workers)
    products = np.array([s.product for s in res.samples])
    oracle = _symbol_products(op, res.samples)
    rel = float(np.max(np.abs(products / oracle - 1)))
    res2 = sector_sweep(op, sector, (1e-1, 1e5), 2 * counts, workers=workers)
    drift = abs(res2.empirical_C / res.empirical_C - 1)
    ok = math.isfinite(res.empirical_C) and not res.s1_violated and rel <= 1e-4 and drift <= 0.05
    return CriterionResult(
        5,
        "resolvent estimate on sector",
        bool(ok),
        f"C={res.empirical_C:.6f}, max rel dev from symbol oracle {rel:.1e} (1e-4), doubling drift {drift:.1e} (5%)",
        budget=120.0,
        details={"empirical_C": res.empirical_C, "doubled": res2.empirical_C, "oracle_rel": rel, "drift": drift},
    )


# --------------------------------------------------------------------------- 6


def check_conjugation_reduction() -> CriterionResult:
    mu = 1.0
    base = assemble_scalar_1d(3, 0.0, Grid1D(0.0, 4.0, 0.1), "Dirichlet")
    conj = conjugate_by_weight(base, mu)
    sector = SectorSpec(0.0, max_sector_halfangle_excess(2.0, 0.5).delta)
    radii = np.geomspace(0.1, 1e3, 4)
    angles = (sector.opening, -sector.opening, 0.0, math.pi / 4, -math.pi / 4)
    worst = 0.0
    for phi in angles:
        for r in radii:
            lam = r * complex(math.cos(phi), math.sin(phi))
            a = resolvent_norm(base, lam, NormKind.WEIGHTED_SUP, weight=mu)
            b = resolvent_norm(conj, lam, NormKind.WEIGHTED_SUP)
            worst = max(worst, abs(a - b) / b)
    return CriterionResult(
        6,
        "conjugation reduction",
        worst <= 1e-10,
        f"20 samples, max rel gap weighted-sup(A) vs sup(conjugated A) {worst:.1e} (1e-10)",
        budget=60.0,
        details={"worst": worst},
    )


# --------------------------------------------------------------------------- 7


def check_translated_sector(counts: int = 200, workers: int = 1) -> CriterionResult:
    n = 3
    op = assemble_lichnerowicz_block(Block.V1, n, (n - 1) / 2, Grid1D(), "Dirichlet")
    A = math.sqrt((n - 1) ** 2 + 4 * block_constant(Block.V1, n))
    delta = max_sector_halfangle_excess(A, 0.5).delta
    lam0 = estimate_lambda0(op)
    at_zero = sector_sweep(op, SectorSpec(0.0, delta), (1e-1, 1e5), counts, workers=workers)
    shifted = sector_sweep(op, SectorSpec(lam0 + 0.5, delta), (1e-1, 1e5), counts, workers=workers)
    zero_ok = at_zero.s1_violated
    shift_ok = (not shifted.s1_violated) and math.isfinite(shifted.empirical_C)
    top = float(discrete_spectrum(op).real.max())
    return CriterionResult(
        7,
        "translated sector for the V1 block",
        bool(zero_ok and shift_ok),
        (
            f"lambda0={lam0:.4f} (top eigenvalue {top:.4f}); vertex 0: s1_violated={at_zero.s1_violated} "
            f"(expected True); vertex lambda0+0.5: s1_violated={shifted.s1_violated}, C={shifted.empirical_C:.4f}"
        ),
        budget=120.0,
        details={
            "lambda0": lam0,
            "vertex_zero_violated": at_zero.s1_violated,
            "vertex_zero_C": at_zero.empirical_C,
            "shifted_violated": shifted.s1_violated,
            "shifted_C": shifted.empirical_C,
        },
    )


# --------------------------------------------------------------------------- 8


def check_semigroup_consistency() -> CriterionResult:
    sector = SectorSpec(0.0, max_sector_halfangle_excess(2.0, 0.5).delta)
    per = assemble_scalar_1d(3, 0.5, Grid1D(), "Periodic")
    t = per.coordinates
    u0 = np.exp(-((t - 6.0) ** 2)) + 0.25 * np.cos(2 * math.pi * t / 12.0)
    oracle_gap = 0.0
    for tt in (0.1, 1.0, 10.0):
        a = apply_semigroup(per, tt, u0, build_contour(sector, tt))
        b = fourier_semigroup(per, tt, u0)
        oracle_gap = max(oracle_gap, np.linalg.norm(a - b) / np.linalg.norm(b))

    dir_op = assemble_scalar_1d(3, 1.0, Grid1D(), "Dirichlet")
    t = dir_op.coordinates
    v0 = np.exp(-((t - 6.0) ** 2) / 2)
    e1 = apply_semigroup(dir_op, 1.0, v0, build_contour(sector, 1.0))
    cn = reference_step(dir_op, 1.0, v0, "CrankNicolson", 1024)
    cn_gap = np.linalg.norm(e1 - cn) / np.linalg.norm(e1)
    e2 = apply_semigroup(dir_op, 2.0, v0, build_contour(sector, 2.0))
    e11 = apply_semigroup(dir_op, 1.0, e1, build_contour(sector, 1.0))
    sg_gap = np.linalg.norm(e11 - e2) / np.linalg.norm(e2)
    e0 = apply_semigroup(dir_op, 1e-6, v0, build_contour(sector, 1e-6))
    id_gap = np.linalg.norm(e0 - v0) / np.linalg.norm(v0)
    ok = oracle_gap <= 1e-8 and cn_gap <= 1e-4 and sg_gap <= 1e-6 and id_gap <= 1e-4
    return CriterionResult(
        8,
        "semigroup consistency",
        bool(ok),
        f"vs Fourier {oracle_gap:.1e} (1e-8), vs CN {cn_gap:.1e} (1e-4), semigroup {sg_gap:.1e} (1e-6), t->0 {id_gap:.1e} (1e-4)",
        budget=180.0,
        details={"fourier": oracle_gap, "crank_nicolson": cn_gap, "semigroup": sg_gap, "identity": id_gap},
    )


# --------------------------------------------------------------------------- 9


def check_h3_kernel() -> CriterionResult:
    hs = (0.1, 0.05, 0.025)
    res = [h3_kernel_pde_residual(0.5, h) for h in hs]
    order = _fit_order(hs, res)
    cross = h3_bump_cross_check()
    ok = order >= 1.5 and cross["peak_rel_error"] <= 0.02
    return CriterionResult(
        9,
        "H3 kernel cross-validation",
        bool(ok),
        f"PDE residual order {order:.2f} (>= 1.5), evolved bump peak error {cross['peak_rel_error']:.2e} (2%)",
        budget=180.0,
        details={"residuals": res, "order": order, "peak_rel_error": cross["peak_rel_error"]},
    )


# --------------------------------------------------------------------------- 10


def check_decomposition() -> CriterionResult:
    grids = (Grid2D(Grid1D(0.0, 8.0, 0.2), 16), Grid2D(Grid1D(0.0, 8.0, 0.1), 32), Grid2D(Grid1D(0.0, 8.0, 0.05), 64))
    ok = True
    rates = {}
    spreads = {}
    for nu in (0.5, 1.0, 2.0):
        spec = AHMetricSpec(n=3, nu=nu, amplitude=0.1, profile="cosine", component="tangential")
        sups = []
        for g in grids:
            op = assemble_scalar_2d(spec, 1.0, g)
            dec = decompose_operator(op, spec)
            exact = (dec.sum() != op.matrix).nnz == 0
            ok &= exact
            sups.append(dec.bdd_sup)
            rate = dec.van_decay_rate()
        rates[nu] = rate
        spreads[nu] = max(sups) / min(sups) - 1
        ok &= abs(rate - nu) <= 0.15 * nu and spreads[nu] <= 0.05
    return CriterionResult(
        10,
        "decomposition diagnostics",
        bool(ok),
        "decay rates "
        + ", ".join(f"nu={k:g}: {v:.3f}" for k, v in rates.items())
        + f" (15%); z_bdd sup spread max {max(spreads.values()):.1e} (5%)",
        budget=60.0,
        details={"rates": rates, "spreads": spreads},
    )


CHECKS: dict[int, Callable[..., CriterionResult]] = {
    1: check_indicial_exactness,
    2: check_fredholm_window,
    3: check_sector_certification,
    4: check_spectral_ray,
    5: check_resolvent_estimate,
    6: check_conjugation_reduction,
    7: check_translated_sector,
    8: check_semigroup_consistency,
    9: check_h3_kernel,
    10: check_decomposition,
}


def run_check(number: int, **kwargs) -> CriterionResult:
    start = time.perf_counter()
    result = CHECKS[number](**kwargs)
    result.seconds = time.perf_counter() - start
    return result


def run_acceptance(selection=None, workers: int = 1, report: Callable[[str], None] | None = None) -> list[CriterionResult]:
    out = []
    for k in sorted(selection or CHECKS):
        kwargs = {"workers": workers} if k in (5, 7) else {}
        res = run_check(k, **kwargs)
        if report is not None:
            report(res.line())
        out.append(res)
    return out
