import csv
import json
import math

import numpy as np
import pytest

from ahsector import cli
from ahsector.errors import ConfigError
from ahsector.indicial import block_indicial_roots
from ahsector.operators import Grid1D, assemble_scalar_1d
from ahsector.resolvent import sector_sweep
from ahsector.sectors import SectorSpec

SMALL_SWEEP = [
    "experiment=ResolventSweep",
    "operator.bc=Periodic",
    "operator.t_max=6.0",
    "operator.h=0.1",
    "sweep.counts=5",
    "sweep.r_min=1.0",
    "sweep.r_max=100.0",
]


def run(tmp_path, *overrides, name="out"):
    out = tmp_path / name
    code = cli.main([*(a for o in overrides for a in ("--set", o)), "--output", str(out)])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_indicial_report_row(tmp_path):
    code, out = run(tmp_path, "n=3", "lambdas=[[1.0, 0.0]]")
    assert code == 0
    rows = read_csv(out / "indicial.csv")
    scalar = [r for r in rows if r["block"] == "Scalar"]
    assert len(scalar) == 1
    assert float(scalar[0]["root_minus_re"]) == pytest.approx(1 - math.sqrt(2), abs=1e-14)
    assert float(scalar[0]["root_plus_re"]) == pytest.approx(1 + math.sqrt(2), abs=1e-14)
    v2 = block_indicial_roots("V2", 3, 1.0)
    row = next(r for r in rows if r["block"] == "V2")
    assert float(row["root_plus_re"]) == v2.plus.real
    windows = json.loads((out / "windows.json").read_text())
    assert windows["ScalarOnly"]["radius"] == pytest.approx(1.0)


def test_runs_are_byte_identical(tmp_path):
    _, a = run(tmp_path, *SMALL_SWEEP, name="same")
    first = json.loads((a / "manifest.json").read_text())
    _, b = run(tmp_path, *SMALL_SWEEP, name="same")
    second = json.loads((b / "manifest.json").read_text())
    assert first["files"] == second["files"]
    assert first["config_hash"] == second["config_hash"]


def test_manifest_contents(tmp_path):
    code, out = run(tmp_path, *SMALL_SWEEP)
    assert code == 0
    m = json.loads((out / "manifest.json").read_text())
    assert set(m) >= {"config", "config_hash", "files", "versions", "wall_time_s", "success"}
    assert set(m["versions"]) == {"ahsector", "python", "numpy", "scipy"}
    for name in ("sweep.csv", "sweep.json", "plots/sweep.gp", "plots/ray_interior_axis.csv"):
        assert name in m["files"]
    assert m["success"] is True
    assert json.loads((out / "sweep.json").read_text())["config_hash"] == m["config_hash"]


def test_config_errors_exit_2(tmp_path, capsys):
    assert run(tmp_path, "n=1")[0] == 2
    assert "n must be an integer" in capsys.readouterr().err
    assert run(tmp_path, "sweep.count=3")[0] == 2
    assert "unknown key sweep.count" in capsys.readouterr().err
    assert run(tmp_path, "sector.epsilon=1.5", "operator.bc=Neumann")[0] == 2
    err = capsys.readouterr().err
    assert "sector.epsilon" in err and "operator.bc" in err


def test_invalid_json_config(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli.main([str(p)]) == 2
    assert cli.main([str(tmp_path / "missing.json")]) == 4


def test_config_roundtrip(tmp_path):
    cfg = cli.load_config(None, ["mu=0.5", "operator.kind=LichnerowiczBlock", "operator.block=V1", "semigroup.times=[0.5]"])
    p = tmp_path / "c.json"
    p.write_text(cfg.to_json())
    again = cli.load_config(str(p))
    assert again == cfg and again.hash == cfg.hash


def test_override_must_be_key_value():
    with pytest.raises(ConfigError):
        cli.apply_overrides({}, ["novalue"])


def test_print_config(capsys):
    assert cli.main(["--print-config", "--set", "n=4", "--threads", "2"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["n"] == 4 and d["threads"] == 2


def test_lambda0_vertex_policy(tmp_path):
    code, out = run(
        tmp_path,
        *SMALL_SWEEP,
        "operator.kind=LichnerowiczBlock",
        "operator.block=V1",
        "operator.bc=Dirichlet",
        "sector.vertex_policy=Lambda0Plus",
        "sector.vertex_margin=0.5",
    )
    assert code == 0
    d = json.loads((out / "sweep.json").read_text())
    assert d["sector"]["vertex"][0] == pytest.approx(d["lambda0"] + 0.5)
    assert d["vertex_check"] is True


def test_failed_sweep_exits_3(tmp_path):
    code, out = run(tmp_path, *SMALL_SWEEP, "operator.kind=LichnerowiczBlock", "operator.block=V1", "sector.delta=1.2")
    assert code == 0
    code, out = run(tmp_path, *SMALL_SWEEP, "mu=0.0", "sector.delta=1.2", name="bad")
    assert code == 3
    assert json.loads((out / "manifest.json").read_text())["success"] is False


def test_plot_data(tmp_path):
    op = assemble_scalar_1d(3, 0.4, Grid1D(0.0, 4.0, 0.1), "Dirichlet")
    res = sector_sweep(op, SectorSpec(0.0, 0.4), (1.0, 1e3), 7)
    files = cli.emit_plot_data(res, tmp_path / "plots")
    csvs = [f for f in files if f.suffix == ".csv"]
    assert len(csvs) == 5
    best = 0.0
    for f in csvs:
        rows = read_csv(f)
        assert len(rows) == 7
        assert list(rows[0]) == ["abs_lambda", "norm", "product"]
        best = max(best, max(float(r["product"]) for r in rows))
    assert best == res.empirical_C
    assert (tmp_path / "plots" / "sweep.gp").read_text().count("ray_") == 5


def test_spectrum_and_certificate(tmp_path):
    code, out = run(tmp_path, "experiment=SpectrumCheck", "operator.bc=Periodic", "operator.h=0.1")
    assert code == 0
    d = json.loads((out / "spectrum.json").read_text())
    assert d["symbol_max_error"] < 1e-9
    assert d["lambda0"] == pytest.approx(-1.0, abs=1e-6)
    code, out = run(tmp_path, "experiment=SectorCertify", "sector.epsilon=0.5", name="cert")
    assert code == 0
    assert json.loads((out / "certificate.json").read_text())["delta"] == pytest.approx(math.acos(0.5), abs=2e-4)


def test_semigroup_run(tmp_path):
    code, out = run(
        tmp_path,
        "experiment=SemigroupRun",
        "operator.bc=Periodic",
        "operator.h=0.1",
        "sector.delta=0.6",
        "semigroup.times=[0.5, 2.0]",
        "semigroup.reference_steps=256",
    )
    assert code == 0
    d = json.loads((out / "semigroup.json").read_text())
    for row in d["comparisons"]:
        assert row["fourier_rel_gap"] < 1e-8
        assert row["crank_nicolson_rel_gap"] < 1e-4
    rows = read_csv(out / "semigroup.csv")
    assert {float(r["time"]) for r in rows} == {0.0, 0.5, 2.0}


def test_semigroup_with_half_plane_is_config_error(tmp_path):
    assert run(tmp_path, "experiment=SemigroupRun", "sector.delta=0.0")[0] == 2


def test_full_suite_subset(tmp_path, capsys):
    code, out = run(tmp_path, "experiment=FullSuite", "checks=[1, 6]")
    assert code == 0
    text = (out / "acceptance.txt").read_text().splitlines()
    assert [line.split()[:2] for line in text] == [["PASS", "1"], ["PASS", "6"]]
    m = json.loads((out / "manifest.json").read_text())
    assert set(m["timings_s"]) == {"1", "6"}
    assert "[PASS]" in capsys.readouterr().out


def test_threads_do_not_change_results(tmp_path):
    _, a = run(tmp_path, *SMALL_SWEEP, name="t1")
    _, b = run(tmp_path, *SMALL_SWEEP, "threads=3", name="t3")
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    ra = np.array([float(r["product"]) for r in read_csv(a / "sweep.csv")])
    assert np.all(np.isfinite(ra))
