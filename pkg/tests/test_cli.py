from __future__ import annotations

import csv
import json

import pytest

from monesc import acceptance
from monesc.cli import main


def test_example1_run_writes_artifacts(tmp_path, capsys):
    code = main(["example1", "--z0", "4", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "status=ok" in out
    for name in ("trace.csv", "metrics.json", "metadata.json", "config.ini"):
        assert (tmp_path / name).exists()
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert metrics["terminal_amplitude"] <= 0.15


def test_invalid_override_exits_2_without_running(tmp_path, capsys):
    code = main(["example1", "--set", "controller.r=0", "--out", str(tmp_path)])
    assert code == 2
    assert "violation=r must be positive" in capsys.readouterr().out
    assert not (tmp_path / "trace.csv").exists()


def test_unknown_key_exits_2(tmp_path, capsys):
    assert main(["example1", "--set", "controller.bogus=1", "--out", str(tmp_path)]) == 2
    assert "unknown key" in capsys.readouterr().out


def test_diverged_run_keeps_partial_trace(tmp_path, capsys):
    code = main(["example1", "--z0", "7", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 3
    assert "status=diverged" in out
    assert (tmp_path / "trace.csv").exists()
    assert json.loads((tmp_path / "metrics.json").read_text())["completed"] is False


def test_cart_moving_has_source_column(tmp_path):
    assert main(["cart", "--moving", "--set", "grid.T=20", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "trace.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[-1]["src"] != "" and rows[-1]["v"] != ""
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["effective"]["mu"] == 0.5


def test_run_from_config_file(tmp_path):
    from pathlib import Path

    cfg = Path(__file__).resolve().parents[1] / "configs" / "cart_fixed.ini"
    assert main(["run", "--config", str(cfg), "--set", "grid.T=5", "--out", str(tmp_path)]) == 0
    assert main(["run", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2


def test_sweep_empty_values_exits_2(tmp_path, capsys):
    assert main(["sweep", "--preset", "cart", "--param", "plant.mu", "--values", " , ", "--out", str(tmp_path)]) == 2
    assert "empty value list" in capsys.readouterr().out


def test_sweep_bad_param_exits_2(tmp_path):
    assert main(["sweep", "--preset", "cart", "--param", "plant.nothing", "--values", "1", "--out", str(tmp_path)]) == 2


def test_sweep_writes_summary(tmp_path):
    code = main(
        ["sweep", "--preset", "example1", "--param", "init.z0", "--values", "2,7", "--set", "grid.T=9",
         "--workers", "2", "--out", str(tmp_path)]
    )
    assert code == 1  # the z0=7 member diverges
    with open(tmp_path / "summary.csv", newline="") as fh:
        rows = {r["value"]: r for r in csv.DictReader(fh)}
    assert rows["2"]["status"] == "ok"
    assert rows["7"]["status"] == "diverged"
    assert (tmp_path / "init.z0=2" / "trace.csv").exists()


def test_verify_prints_one_line_per_criterion(tmp_path, capsys):
    code = main(["verify", "--out", str(tmp_path)])
    lines = capsys.readouterr().out.strip().splitlines()
    crit = [ln for ln in lines if ln.startswith(("PASS", "FAIL"))]
    assert len(crit) == 9
    assert [ln.split()[1] for ln in crit] == [f"C{i}" for i in range(1, 10)]
    all_pass = all(ln.startswith("PASS") for ln in crit)
    assert code == (0 if all_pass else 1)
    assert lines[-1].startswith("summary ")
    assert (tmp_path / "verify.txt").read_text().splitlines() == lines


def test_injected_fault_is_caught():
    res = acceptance.c3_monitor_bound(["diagnostics.fault=skip-switch"])
    assert not res.passed


def test_bad_subcommand():
    with pytest.raises(SystemExit):
        main(["launch"])
