import csv
import json

import numpy as np
import pytest

from aclbeam.cli import UsageError, parse_axis, parse_grid, run


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_spectrum_run(tmp_path):
    out = tmp_path / "spec"
    assert run(["spectrum", "--n", "10", "--modes", "8", "--out", str(out)]) == 0
    m = manifest(out)
    assert m["status"] == "ok" and m["outputs"] == ["spectrum.csv", "summary.json"]
    rows = list(csv.reader(open(out / "spectrum.csv")))
    assert rows[0] == ["re", "im", "trace_v1", "trace_v3", "trace_w", "trace_wx", "axial_fraction"]
    assert len(rows) == 9
    summary = json.loads((out / "summary.json").read_text())
    assert summary["spectral_abscissa"] < 0


def test_default_mode_count_fits_small_mesh(tmp_path):
    assert run(["spectrum", "--n", "3", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "spectrum.csv").read_text().splitlines()) == 13


def test_simulate_run_with_snapshots(tmp_path):
    out = tmp_path / "sim"
    assert run(["simulate", "--n", "8", "--T", "0.2", "--dt", "0.05", "--snapshot-every", "2",
                "--out", str(out)]) == 0
    m = manifest(out)
    assert m["status"] == "ok"
    assert m["outputs"][0] == "energy.csv" and len(m["outputs"]) == 4
    assert (out / "snapshots" / "t00002.csv").exists()


def test_dump_operators(tmp_path):
    ops = tmp_path / "ops"
    assert run(["spectrum", "--n", "5", "--modes", "3", "--out", str(tmp_path / "o"),
                "--dump-operators", str(ops)]) == 0
    for name in ("M", "K", "D"):
        lines = (ops / f"{name}.csv").read_text().splitlines()
        assert lines[0] == "# 20 20"
        A = np.loadtxt(ops / f"{name}.csv", delimiter=",")
        assert A.shape == (20, 20)


def test_malformed_config_exits_2_without_outputs(tmp_path):
    cfgfile = tmp_path / "bad.toml"
    cfgfile.write_text("[layer.core]\nh = -1.0\n")
    out = tmp_path / "out"
    assert run(["spectrum", "--config", str(cfgfile), "--out", str(out)]) == 2
    assert not out.exists()


def test_unknown_key_exits_2(tmp_path, capsys):
    cfgfile = tmp_path / "bad.toml"
    cfgfile.write_text("[gains]\ns2 = 1.0\n")
    assert run(["simulate", "--config", str(cfgfile), "--out", str(tmp_path / "o")]) == 2
    assert "gains.s2" in capsys.readouterr().err


def test_too_many_modes_exits_2(tmp_path):
    out = tmp_path / "o"
    assert run(["spectrum", "--n", "4", "--modes", "17", "--out", str(out)]) == 2
    assert not out.exists()


def test_numerical_failure_exits_3(tmp_path):
    out = tmp_path / "o"
    assert run(["simulate", "--n", "4", "--dt", "1e200", "--T", "1e200", "--out", str(out)]) == 3
    m = manifest(out)
    assert m["status"] == "failed" and m["error"]


def test_runs_are_deterministic(tmp_path):
    for tag in ("a", "b"):
        assert run(["simulate", "--n", "6", "--T", "0.5", "--out", str(tmp_path / tag)]) == 0
    assert (tmp_path / "a" / "energy.csv").read_bytes() == (tmp_path / "b" / "energy.csv").read_bytes()


def test_replay_reproduces(tmp_path):
    assert run(["spectrum", "--n", "8", "--modes", "5", "--out", str(tmp_path / "a")]) == 0
    assert run(["replay", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "spectrum.csv").read_bytes()
    assert a == (tmp_path / "b" / "spectrum.csv").read_bytes()
    assert manifest(tmp_path / "b")["command"] == "spectrum"


def test_compare_run(tmp_path):
    assert run(["compare", "--n", "12", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "compare.csv")))
    assert rows[0] == ["mode", "omega_voltage", "omega_charge", "shift", "axial_fraction"]
    assert all(float(r[3]) >= 0 for r in rows[1:]) and len(rows) > 1


def test_multilayer_spectrum(tmp_path):
    cfgfile = tmp_path / "stack.toml"
    cfgfile.write_text("[[layer.odd]]\ngamma = 0.1\n[[layer.odd]]\ngamma = 0.1\n"
                       "[[layer.even]]\nh = 0.05\n[gains]\ns = [0.5, 0.5]\nk1 = 0.5\nk2 = 0.5\n")
    assert run(["spectrum", "--multilayer", "--config", str(cfgfile), "--n", "6",
                "--out", str(tmp_path / "o")]) == 0
    assert manifest(tmp_path / "o")["config"]["gains"]["s"] == [0.5, 0.5]


def test_sweep_order_and_values(tmp_path, monkeypatch):
    monkeypatch.setenv("ACL_THREADS", "2")
    out = tmp_path / "sw"
    assert run(["sweep", "--n", "6", "--T", "1", "--dt", "0.05", "--modes", "6",
                "--grid", "s1=0:0.5:1", "--grid", "k2=0.25,0.75", "--out", str(out)]) == 0
    rows = list(csv.reader(open(out / "sweep.csv")))
    assert rows[0] == ["s1", "s3", "k1", "k2", "spectral_abscissa", "decay_rate"]
    got = [(float(r[0]), float(r[3])) for r in rows[1:]]
    assert got == [(0.0, 0.25), (0.0, 0.75), (0.5, 0.25), (0.5, 0.75), (1.0, 0.25), (1.0, 0.75)]
    assert all(float(r[4]) < 0 for r in rows[1:])


def test_sweep_without_grid_exits_2(tmp_path):
    assert run(["sweep", "--out", str(tmp_path / "o")]) == 2


def test_parse_axis_forms():
    assert parse_axis("s1=0:0.25:1") == ("s1", [0.0, 0.25, 0.5, 0.75, 1.0])
    assert parse_axis("k1=1,2") == ("k1", [1.0, 2.0])
    assert parse_axis("k2=3") == ("k2", [3.0])
    names, pts = parse_grid(["s1=0,1;k1=2"])
    assert names == ["s1", "k1"] and pts == [(0.0, 2.0), (1.0, 2.0)]
    for bad in ("s2=1", "s1", "s1=0:0:1", "s1=a"):
        with pytest.raises(UsageError):
            parse_axis(bad)
    with pytest.raises(UsageError):
        parse_grid(["s1=1", "s1=2"])
