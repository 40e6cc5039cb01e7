"""CLI dispatch, config round-trip, persistence and determinism."""

import csv
import json
from pathlib import Path

import pytest

from topoplasma.cli import main
from topoplasma.config import (
    RunConfig,
    parse_config,
    reg_from_string,
    serialize_config,
    threads_from_env,
)
from topoplasma.errors import InvalidParameter


def run(args, out):
    return main(args + ["--out", str(out)])


def read_summary(out) -> dict:
    (run_dir,) = [d for d in Path(out).iterdir() if d.is_dir()]
    with open(run_dir / "summary.json") as fh:
        return json.load(fh)


def read_csv_rows(out, name):
    (run_dir,) = [d for d in Path(out).iterdir() if d.is_dir()]
    with open(run_dir / name) as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------
# config machinery
# --------------------------------------------------------------------------

def test_config_round_trip():
    cfg = RunConfig(command="flow", sections={
        "plasma": {"omega_c": 1.0, "omega_p": 0.8284271247461903, "k_z": 2,
                   "reg": "omega-decay:0.01"},
        "disc": {"n_y": 300, "L": 30.0},
        "flow": {"w_edge": 0.1, "strict": True},
    })
    assert parse_config(serialize_config(cfg)) == cfg


def test_config_overrides_and_types():
    cfg = parse_config("[plasma]\nomega_c = 1.5\nk_z = 2\nflag = true\n")
    assert cfg.get("plasma", "omega_c") == 1.5
    assert cfg.get("plasma", "k_z") == 2
    assert cfg.get("plasma", "flag") is True
    cfg2 = cfg.with_overrides({("plasma", "omega_c"): -2.0,
                               ("plasma", "skip"): None})
    assert cfg2.get("plasma", "omega_c") == -2.0
    assert "skip" not in cfg2.sections["plasma"]


def test_reg_from_string():
    assert reg_from_string(None).kind == "none"
    r = reg_from_string("omega-decay:0.5")
    assert r.kind == "omega-decay" and r.eta == 0.5
    with pytest.raises(InvalidParameter):
        reg_from_string("bogus:1")


def test_threads_from_env(monkeypatch):
    assert threads_from_env(4) == 4
    monkeypatch.setenv("TOPOPLASMA_THREADS", "3")
    assert threads_from_env(None) == 3
    monkeypatch.setenv("TOPOPLASMA_THREADS", "x")
    with pytest.raises(InvalidParameter):
        threads_from_env(None)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def test_phase_single_point(tmp_path):
    assert run(["phase", "--k-z", "1.0", "--omega-c-range", "1:1:1",
                "--omega-p-range", "0.2:0.2:1"], tmp_path) == 0
    rows = read_csv_rows(tmp_path, "phase_grid.csv")
    assert len(rows) == 1
    assert rows[0]["phase"] == "I+"  # omega_p below omega_-(1,1) = 0.618


def test_phase_grid_region_labels(tmp_path):
    # (Omega, k_z) plane at omega_p = 1: phase I exists only on the
    # under-dense side |Omega| > omega_p
    assert run(["phase", "--omega-p", "1.0", "--omega-c-range=-2:2:5",
                "--k-z-range", "0.4:2:3"], tmp_path) == 0
    rows = read_csv_rows(tmp_path, "phase_grid.csv")
    for row in rows:
        if row["phase"].startswith("I") and not row["phase"].startswith("II"):
            assert abs(float(row["omega_c"])) > 1.0
    bnd = read_csv_rows(tmp_path, "boundaries.csv")
    assert {b["branch"] for b in bnd} <= {"omega_minus", "omega_plus"}
    assert len(bnd) > 0


def test_table1_command(tmp_path):
    assert run(["table1", "--sigma-bar", "0,1"], tmp_path) == 0
    rows = read_csv_rows(tmp_path, "table1.csv")
    assert len(rows) == 16  # 8 phases x 2 sigma values
    row = next(r for r in rows if r["phase"] == "II+" and r["sigma_bar"] == "1")
    assert float(row["C2"]) == pytest.approx(2 ** -0.5, abs=1e-12)


def test_bdi_command_matches_table2(tmp_path):
    om_minus = 0.8284271247461903
    assert run(["bdi", "--south", f"1,{0.5 * om_minus}",
                "--north", f"1,{1.5 * om_minus}", "--k-z", "2",
                "--reg", "omega-decay:0.01"], tmp_path) == 0
    s = read_summary(tmp_path)
    assert s["payload"]["ell1"]["value"] == 1
    assert s["payload"]["ell1"]["is_bdi"] is True
    assert s["payload"]["ell2"]["value"] == 0


def test_table2_command(tmp_path):
    assert run(["table2"], tmp_path) == 0
    s = read_summary(tmp_path)
    got = {r["transition"]: tuple(r["bdi"]) for r in s["payload"]["rows"]}
    assert got["I+->II+"] == (1, 0)
    assert got["IV-->IV+"] == (0, -2)


def test_bulk_spectrum_command(tmp_path):
    assert run(["bulk-spectrum", "--omega-c", "1", "--omega-p", "1",
                "--k-z", "1", "--k-max", "3", "--n-k", "50"], tmp_path) == 0
    rows = read_csv_rows(tmp_path, "bands.csv")
    assert len(rows) == 50
    assert float(rows[0]["omega_0"]) == pytest.approx(0.0, abs=1e-12)


def test_weyl_command(tmp_path):
    assert run(["weyl", "--nscale", "4,8,16", "--energy", "1.0"], tmp_path) == 0
    s = read_summary(tmp_path)
    res = s["payload"]["residuals"]
    assert res[0] > res[1] > res[2]


def test_dirac_reduce_command(tmp_path):
    assert run(["dirac", "--model", "reduce-minus", "--omega-c", "1",
                "--omega-p", "0.83", "--k-z", "2"], tmp_path) == 0
    s = read_summary(tmp_path)
    assert s["payload"]["gap_overlap"] is True
    assert s["payload"]["alpha"] == pytest.approx(3.21607, abs=1e-4)


def test_exit_codes(tmp_path):
    # validation error -> 2
    assert main(["bdi", "--south", "1,1", "--north", "1,1", "--k-z", "2",
                 "--reg", "nonsense:1", "--out", str(tmp_path)]) == 2
    # missing config file -> 2
    assert main(["table1", "--config", str(tmp_path / "none.ini"),
                 "--out", str(tmp_path)]) == 2


def test_flow_command_coarse_and_deterministic(tmp_path):
    args = ["flow", "--preset", "i-ii", "--n-y", "60", "--L", "15",
            "--kx=-1.5:1.5:25", "--threads", "1"]
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert run(args, out1) == 0
    assert run(args + ["--threads", "2"], out2) == 0
    s1, s2 = read_summary(out1), read_summary(out2)
    assert s1["run_id"] == s2["run_id"]
    # payload identical across runs and thread counts (timestamp aside)
    assert s1["payload"] == s2["payload"]
    assert s1["payload"]["gap1"]["flow"] == 1
    assert s1["payload"]["gap1"]["bdi"] == 1
    rows = read_csv_rows(out1, "sweep.csv")
    assert len(rows) == 25 * 9 * 60
