"""Command-line experiment runner.

Usage::

    ahsector [CONFIG.json] [--set key=value ...] [--threads N] [--output DIR]

Keys of nested sections are addressed with dots, e.g. ``--set sweep.counts=50``.
Values are parsed as JSON when possible and kept as strings otherwise.

Exit codes: 0 success, 2 configuration error, 3 numerical or acceptance
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .acceptance import CHECKS, run_acceptance
from .errors import AHSectorError, ConfigError, InvalidDimensionError, InvalidParameterError, SymmetrizationError
from .geometry import AHMetricSpec
from .indicial import Block, BlockSet, block_constant, block_indicial_roots, fredholm_weight_window
from .operators import (
    Grid1D,
    Grid2D,
    OperatorKind,
    assemble_lichnerowicz_block,
    assemble_radial_h3,
    assemble_scalar_1d,
    assemble_scalar_2d,
    estimate_lambda0,
)
from .resolvent import ResolventSweepResult, discrete_spectrum, sector_sweep
from .sectors import SectorSpec, max_sector_halfangle_excess
from .semigroup import apply_semigroup, build_contour, fourier_semigroup, reference_step

__all__ = ["ExperimentConfig", "load_config", "run_experiment", "emit_plot_data", "main"]

EXPERIMENTS = ("IndicialReport", "SectorCertify", "ResolventSweep", "SpectrumCheck", "SemigroupRun", "FullSuite")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


@dataclass(frozen=True)
class OperatorConfig:
    kind: str = "Scalar1D"
    block: str | None = None
    bc: str = "Dirichlet"
    t_min: float = 0.0
    t_max: float = 12.0
    h: float = 0.05
    theta_count: int = 32
    period: float = 2 * math.pi
    nu: float = 1.0
    amplitude: float = 0.0
    profile: str = "cosine"
    component: str = "tangential"


@dataclass(frozen=True)
class SectorConfig:
    epsilon: float = 0.5
    delta: float | None = None
    vertex_policy: str = "Zero"
    vertex_margin: float = 0.1


@dataclass(frozen=True)
class SweepConfig:
    r_min: float = 0.1
    r_max: float = 1e5
    counts: int = 200
    norm_kind: str = "Spectral"
    report_both: bool = False


@dataclass(frozen=True)
class SemigroupConfig:
    times: tuple[float, ...] = (0.1, 1.0, 10.0)
    node_count: int = 64
    shape: str = "SectorBoundary"
    reference_steps: int = 1024


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "IndicialReport"
    n: int = 3
    mu: float = 1.0
    lambdas: tuple[tuple[float, float], ...] = ((0.0, 0.0), (1.0, 0.0), (-0.5, 0.0), (0.0, 2.0))
    operator: OperatorConfig = OperatorConfig()
    sector: SectorConfig = SectorConfig()
    sweep: SweepConfig = SweepConfig()
    semigroup: SemigroupConfig = SemigroupConfig()
    checks: tuple[int, ...] = tuple(sorted(CHECKS))
    output_dir: str = "out"
    threads: int = 1

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @property
    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


_SECTIONS = {"operator": OperatorConfig, "sector": SectorConfig, "sweep": SweepConfig, "semigroup": SemigroupConfig}


def _coerce(cls, data: dict, prefix: str, problems: list[str]):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            problems.append(f"unknown key {prefix}{key}")
            continue
        if key in _SECTIONS and cls is ExperimentConfig:
            if not isinstance(value, dict):
                problems.append(f"{prefix}{key} must be an object")
                continue
            kwargs[key] = _coerce(_SECTIONS[key], value, f"{key}.", problems)
            continue
        if isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        kwargs[key] = value
    return cls(**kwargs)


def _validate(cfg: ExperimentConfig) -> list[str]:
    p = []

    def need(cond, msg):
        if not cond:
            p.append(msg)

    num = (int, float)
    need(cfg.experiment in EXPERIMENTS, f"experiment must be one of {EXPERIMENTS}")
    need(isinstance(cfg.n, int) and not isinstance(cfg.n, bool) and 2 <= cfg.n <= 64, "n must be an integer in [2, 64]")
    need(isinstance(cfg.mu, num) and math.isfinite(cfg.mu), "mu must be a finite number")
    need(isinstance(cfg.threads, int) and cfg.threads >= 1, "threads must be a positive integer")
    need(isinstance(cfg.output_dir, str) and cfg.output_dir != "", "output_dir must be a non-empty string")
    for lam in cfg.lambdas:
        need(isinstance(lam, tuple) and len(lam) == 2 and all(isinstance(x, num) for x in lam), "lambdas entries must be [re, im]")
    need(all(isinstance(c, int) and c in CHECKS for c in cfg.checks), f"checks must be a subset of {sorted(CHECKS)}")
    o = cfg.operator
    need(o.kind in {k.value for k in OperatorKind}, "operator.kind must be one of Scalar1D, Scalar2D, LichnerowiczBlock, RadialH3")
    need(o.block is None or o.block in {"V1", "V2", "V3", "Trace"}, "operator.block must be V1, V2, V3 or Trace")
    need(o.kind != "LichnerowiczBlock" or o.block is not None, "operator.block is required for LichnerowiczBlock")
    need(o.bc in ("Dirichlet", "Periodic"), "operator.bc must be Dirichlet or Periodic")
    need(isinstance(o.h, num) and o.h > 0, "operator.h must be positive")
    need(isinstance(o.t_max, num) and isinstance(o.t_min, num) and o.t_max > o.t_min, "operator.t_max must exceed operator.t_min")
    need(isinstance(o.theta_count, int) and o.theta_count >= 3, "operator.theta_count must be an integer >= 3")
    need(isinstance(o.nu, num) and o.nu > 0, "operator.nu must be positive")
    need(isinstance(o.amplitude, num), "operator.amplitude must be a number")
    s = cfg.sector
    need(isinstance(s.epsilon, num) and 0 < s.epsilon < 1, "sector.epsilon must lie in (0, 1)")
    need(s.delta is None or (isinstance(s.delta, num) and 0 <= s.delta < math.pi / 2), "sector.delta must lie in [0, pi/2)")
    need(s.vertex_policy in ("Zero", "Lambda0Plus"), "sector.vertex_policy must be Zero or Lambda0Plus")
    need(isinstance(s.vertex_margin, num) and s.vertex_margin >= 0, "sector.vertex_margin must be >= 0")
    w = cfg.sweep
    need(isinstance(w.r_min, num) and isinstance(w.r_max, num) and 0 < w.r_min <= w.r_max, "need 0 < sweep.r_min <= sweep.r_max")
    need(isinstance(w.counts, int) and w.counts >= 1, "sweep.counts must be a positive integer")
    need(w.norm_kind in ("Spectral", "WeightedSup"), "sweep.norm_kind must be Spectral or WeightedSup")
    need(isinstance(w.report_both, bool), "sweep.report_both must be a boolean")
    g = cfg.semigroup
    need(len(g.times) > 0 and all(isinstance(t, num) and t > 0 for t in g.times), "semigroup.times must be positive numbers")
    need(isinstance(g.node_count, int) and g.node_count >= 2, "semigroup.node_count must be an integer >= 2")
    need(g.shape in ("SectorBoundary", "Parabolic"), "semigroup.shape must be SectorBoundary or Parabolic")
    need(isinstance(g.reference_steps, int) and g.reference_steps >= 1, "semigroup.reference_steps must be a positive integer")
    return p


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    problems: list[str] = []
    cfg = _coerce(ExperimentConfig, data, "", problems)
    if not problems:
        problems = _validate(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    data = json.loads(json.dumps(data))
    bad = []
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            bad.append(f"override {item!r} is not key=value")
            continue
        node = data
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                bad.append(f"override {key!r} descends into a non-object")
                break
        else:
            node[leaf] = _parse_value(value)
    if bad:
        raise ConfigError(bad)
    return data


def load_config(path: str | None, overrides: list[str] = ()) -> ExperimentConfig:
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(apply_overrides(data, list(overrides)))


# --------------------------------------------------------------------------- experiments


def build_operator(cfg: ExperimentConfig):
    o = cfg.operator
    grid = Grid1D(o.t_min, o.t_max, o.h)
    if o.kind == "Scalar1D":
        return assemble_scalar_1d(cfg.n, cfg.mu, grid, o.bc)
    if o.kind == "LichnerowiczBlock":
        return assemble_lichnerowicz_block(o.block, cfg.n, cfg.mu, grid, o.bc)
    if o.kind == "Scalar2D":
        spec = AHMetricSpec(
            n=cfg.n, period=o.period, nu=o.nu, amplitude=o.amplitude, profile=o.profile, component=o.component
        )
        return assemble_scalar_2d(spec, cfg.mu, Grid2D(grid, o.theta_count, o.period), o.bc)
    return assemble_radial_h3(o.t_max, o.h)


def _indicial_A(cfg: ExperimentConfig) -> float:
    """``sqrt((n-1)^2 + 4 b)``: the discriminant at ``lambda = 0`` of the swept block."""
    block = cfg.operator.block if cfg.operator.kind == "LichnerowiczBlock" else "Scalar"
    return math.sqrt((cfg.n - 1) ** 2 + 4 * block_constant(block, cfg.n))


def build_sector(cfg: ExperimentConfig, op=None) -> SectorSpec:
    s = cfg.sector
    delta = s.delta if s.delta is not None else max_sector_halfangle_excess(_indicial_A(cfg), s.epsilon).delta
    vertex = 0.0
    if s.vertex_policy == "Lambda0Plus":
        if op is None:
            op = build_operator(cfg)
        vertex = estimate_lambda0(op) + s.vertex_margin
    return SectorSpec(vertex, delta)


class _Outputs:
    def __init__(self, root: Path):
        self.root = root
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(p)
        return p

    def write_json(self, name: str, obj) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
        return p


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _finite(x: float):
    return x if math.isfinite(x) else "inf"


def _run_indicial(cfg, out: _Outputs) -> dict:
    with out.path("indicial.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["block", "lambda_re", "lambda_im", "root_minus_re", "root_minus_im", "root_plus_re", "root_plus_im"])
        for block in Block:
            for re, im in cfg.lambdas:
                lo, hi = block_indicial_roots(block, cfg.n, complex(re, im))
                w.writerow([block.value, repr(float(re)), repr(float(im)), repr(float(lo.real)), repr(float(lo.imag)), repr(float(hi.real)), repr(float(hi.imag))])
    windows = {}
    for bs in BlockSet:
        win = fredholm_weight_window(bs, cfg.n, 0.0)
        windows[bs.value] = {"mu_min": win.mu_min, "mu_max": win.mu_max, "radius": win.radius}
    out.write_json("windows.json", windows)
    return {"windows": windows}


def _run_sector(cfg, out: _Outputs) -> dict:
    A = _indicial_A(cfg)
    cert = max_sector_halfangle_excess(A, cfg.sector.epsilon)
    summary = {"A": A, "epsilon": cfg.sector.epsilon, "delta": cert.delta, "certificate": cert.certificate, "threshold": cert.threshold}
    out.write_json("certificate.json", summary)
    return summary


def _run_sweep(cfg, out: _Outputs) -> tuple[dict, bool]:
    op = build_operator(cfg)
    sector = build_sector(cfg, op)
    w = cfg.sweep
    res = sector_sweep(op, sector, (w.r_min, w.r_max), w.counts, w.norm_kind, w.report_both, workers=cfg.threads)
    res.to_csv(out.path("sweep.csv"))
    out.write_json("sweep.json", res.summary(cfg.hash))
    plots = emit_plot_data(res, out.root / "plots")
    out.files.extend(plots)
    return res.summary(cfg.hash), not res.s1_violated


def _run_spectrum(cfg, out: _Outputs) -> dict:
    op = build_operator(cfg)
    ev = discrete_spectrum(op)
    with out.path("spectrum.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im"])
        for z in ev:
            w.writerow([repr(float(z.real)), repr(float(z.imag))])
    summary = {"dimension": op.dim, "max_real": float(ev.real.max()), "operator": op.describe()}
    try:
        summary["lambda0"] = estimate_lambda0(op)
    except SymmetrizationError:
        summary["lambda0"] = None
    if op.symbol is not None:
        sym = np.sort_complex(op.symbol.eigenvalues(op.dim))
        summary["symbol_max_error"] = float(np.max(np.abs(np.sort_complex(ev) - sym)))
    out.write_json("spectrum.json", summary)
    return summary


def _run_semigroup(cfg, out: _Outputs) -> dict:
    op = build_operator(cfg)
    sector = build_sector(cfg, op)
    if sector.half_angle_excess == 0:
        raise InvalidParameterError("semigroup runs need delta > 0")
    t = op.coordinates
    mid = 0.5 * (t.min() + t.max())
    u0 = np.exp(-((t - mid) ** 2) / 2).astype(complex)
    g = cfg.semigroup
    summary = {"times": list(g.times), "comparisons": []}
    with out.path("semigroup.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "coordinate", "re", "im"])
        for k, x in enumerate(t):
            w.writerow([repr(0.0), repr(float(x)), repr(float(u0[k].real)), repr(float(u0[k].imag))])
        for tt in g.times:
            u = apply_semigroup(op, tt, u0, build_contour(sector, tt, g.node_count, g.shape), workers=cfg.threads)
            for k, x in enumerate(t):
                w.writerow([repr(float(tt)), repr(float(x)), repr(float(u[k].real)), repr(float(u[k].imag))])
            row = {"time": tt}
            if op.symbol is not None:
                ref = fourier_semigroup(op, tt, u0)
                row["fourier_rel_gap"] = float(np.linalg.norm(u - ref) / np.linalg.norm(ref))
            ref = reference_step(op, tt, u0, "CrankNicolson", g.reference_steps)
            row["crank_nicolson_rel_gap"] = float(np.linalg.norm(u - ref) / max(np.linalg.norm(u), 1e-300))
            summary["comparisons"].append(row)
    out.write_json("semigroup.json", summary)
    return summary


def _run_suite(cfg, out: _Outputs, echo) -> tuple[dict, bool, dict]:
    results = run_acceptance(cfg.checks, workers=cfg.threads, report=echo)
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.number} {r.title}" for r in results]
    out.path("acceptance.txt").write_text("\n".join(lines) + "\n")
    out.write_json("acceptance.json", {str(r.number): {"title": r.title, "passed": r.passed} for r in results})
    timings = {str(r.number): r.seconds for r in results}
    return {"passed": sum(r.passed for r in results), "total": len(results)}, all(r.passed for r in results), timings


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class ExperimentArtifacts:
    output_dir: Path
    files: list[Path]
    summary: dict
    success: bool
    manifest: Path | None = None
    extra: dict = field(default_factory=dict)


def run_experiment(cfg: ExperimentConfig, echo=None) -> ExperimentArtifacts:
    """Run one experiment and write its outputs plus ``manifest.json``."""
    start = time.perf_counter()
    root = Path(cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    out = _Outputs(root)
    success = True
    timings: dict = {}
    if cfg.experiment == "IndicialReport":
        summary = _run_indicial(cfg, out)
    elif cfg.experiment == "SectorCertify":
        summary = _run_sector(cfg, out)
    elif cfg.experiment == "ResolventSweep":
        summary, success = _run_sweep(cfg, out)
    elif cfg.experiment == "SpectrumCheck":
        summary = _run_spectrum(cfg, out)
    elif cfg.experiment == "SemigroupRun":
        summary = _run_semigroup(cfg, out)
    else:
        summary, success, timings = _run_suite(cfg, out, echo)
    manifest = {
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash,
        "files": {str(p.relative_to(root)): _sha256(p) for p in out.files},
        "versions": {
            "ahsector": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": time.perf_counter() - start,
        "success": success,
        "timings_s": timings,
    }
    mpath = root / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ExperimentArtifacts(root, list(out.files), summary, success, mpath)


def emit_plot_data(result: ResolventSweepResult, path) -> list[Path]:
    """One CSV per ray with ``(|lambda|, norm, product)`` plus a gnuplot script."""
    if not result.samples:
        raise InvalidParameterError("sweep result has no samples")
    root = Path(path)
    written = []
    try:
        root.mkdir(parents=True, exist_ok=True)
        for name, samples in result.rays().items():
            p = root / f"ray_{name}.csv"
            with p.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["abs_lambda", "norm", "product"])
                for s in samples:
                    norm = result.norm_of(s)
                    w.writerow([repr(float(abs(s.lam))), repr(float(norm) if norm is not None else math.inf), repr(float(s.product))])
            written.append(p)
        script = root / "sweep.gp"
        plots = ", ".join(f"'{p.name}' using 1:3 with linespoints title '{p.stem[4:]}'" for p in written)
        script.write_text(
            "set datafile separator ','\n"
            "set key autotitle columnhead\n"
            "set logscale x\n"
            "set xlabel '|lambda|'\n"
            "set ylabel '|lambda - omega| * norm'\n"
            f"plot {plots}\n"
        )
        written.append(script)
    except OSError as exc:
        raise OSError(f"cannot write plot data under {root}: {exc}") from exc
    return written


# --------------------------------------------------------------------------- entry point


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ahsector", description="Run sectoriality experiments on discretised collar operators.")
    p.add_argument("config", nargs="?", help="JSON config file (defaults are used for missing keys)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--threads", type=int, help="cap on worker threads")
    p.add_argument("--output", help="output directory (overrides output_dir)")
    p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")
    if args.output is not None:
        overrides.append(f"output_dir={json.dumps(args.output)}")
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.print_config:
        print(cfg.to_json())
        return EXIT_OK
    try:
        art = run_experiment(cfg, echo=print)
    except (InvalidParameterError, InvalidDimensionError) as exc:
        print(f"{cfg.experiment}: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AHSectorError as exc:
        print(f"{cfg.experiment}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"{cfg.experiment}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps({"experiment": cfg.experiment, "success": art.success, "output_dir": str(art.output_dir)}, sort_keys=True))
    return EXIT_OK if art.success else EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
