#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
CLI tests: subcommand outputs, exit codes, reproducibility and manifest replay
"""

import csv
import json

from main import main


def _read_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def _write_config(tmp_path, data, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_dcb_worked_example(tmp_path, capsys):
    out = tmp_path / "dcb"
    assert main(["dcb", "--scenario", "dcb_worked_example", "--out", str(out)]) == 0
    rows = _read_csv(out / "solution.csv")
    assert [(r["flight_id"], float(r["required"]), float(r["delay"])) for r in rows] == [
        ("F-1", 0.0, 0.0), ("F-2", 100.0, 90.0), ("F-3", 300.0, 280.0),
    ]
    summary = json.loads((out / "dcb.json").read_text(encoding="utf-8"))
    assert summary["status"] == "optimal"
    assert summary["total_delay"] == 370.0
    assert summary["violations"] == []
    printed = capsys.readouterr().out
    assert "total_delay=370.0s" in printed
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["subcommand"] == "dcb"
    assert manifest["experiment"]["strategic"] == "exact"
    assert {"solution.csv", "histogram.csv", "dcb.json"} <= set(manifest["outputs"])


def test_dcb_infeasible_exit_code(tmp_path, capsys):
    config = _write_config(tmp_path, {"override": {"dcb": {"horizon": 200.0}}})
    code = main(["dcb", "--scenario", "dcb_worked_example", "--config", config, "--out", str(tmp_path / "out")])
    assert code == 1
    assert '"binding_resource": "P"' in capsys.readouterr().err
    assert (tmp_path / "out" / "manifest.json").exists()
    summary = json.loads((tmp_path / "out" / "dcb.json").read_text(encoding="utf-8"))
    assert summary["status"] == "infeasible"
    assert summary["binding_resource"] == "P"


def test_equilibria_prints_both_strict_profiles(tmp_path, capsys):
    assert main(["equilibria", "--out", str(tmp_path)]) == 0
    printed = capsys.readouterr().out
    assert "(slow_down, speed_up)" in printed
    assert "(speed_up, slow_down)" in printed
    data = json.loads((tmp_path / "equilibria.json").read_text(encoding="utf-8"))
    assert data["stackelberg"] == ["speed_up", "slow_down"]


def test_invalid_scenario_exit_code(tmp_path, capsys):
    config = _write_config(tmp_path, {"override": {"resources": [{"node_id": "N-1", "capacity": 0}]}})
    assert main(["validate", "--config", config]) == 2
    assert "N-1" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path):
    config = _write_config(tmp_path, {"defaults": {"sed": 3}})
    assert main(["schedule", "--config", config, "--out", str(tmp_path / "out")]) == 2


def test_schedule_is_reproducible(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["schedule", "--seed", "7", "--out", str(first)]) == 0
    assert main(["schedule", "--seed", "7", "--out", str(second)]) == 0
    assert (first / "schedule.csv").read_bytes() == (second / "schedule.csv").read_bytes()
    assert len(_read_csv(first / "schedule.csv")) == 30


def test_flags_override_config_defaults(tmp_path):
    config = _write_config(tmp_path, {"defaults": {"seed": 3, "scenario": "merge_two_routes"}})
    out = tmp_path / "out"
    assert main(["schedule", "--config", config, "--seed", "5", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seed"] == 5
    assert manifest["experiment"]["scenario"] == "merge_two_routes"


def test_montecarlo_reproducible_and_replayable(tmp_path):
    args = ["montecarlo", "--scenario", "merge_two_routes", "--tactical", "rule",
            "--risk-preset", "published", "--runs", "2", "--workers", "1"]
    first, second, replay = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(args + ["--out", str(first)]) == 0
    assert main(args + ["--out", str(second)]) == 0
    assert main(["montecarlo", "--config", str(first / "manifest.json"), "--out", str(replay)]) == 0
    for name in ("events.csv", "flights.csv", "report.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
        assert (first / name).read_bytes() == (replay / name).read_bytes()
    report = json.loads((first / "report.json").read_text(encoding="utf-8"))
    assert report["metrics"]["run_count"] == 2
    assert report["calibration"] is None


def test_simulate_writes_summary(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--scenario", "merge_two_routes", "--record-speeds", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["events"]["NMAC"] == 1
    assert summary["released"] == 2
    assert (out / "speeds.csv").exists()
    assert len(_read_csv(out / "flights.csv")) == 2


def test_policy_mode_without_file_fails(tmp_path):
    code = main(["simulate", "--scenario", "merge_two_routes", "--tactical", "policy", "--out", str(tmp_path)])
    assert code == 2


def test_non_positive_runs_rejected(tmp_path):
    assert main(["montecarlo", "--runs", "0", "--out", str(tmp_path)]) == 2


def test_report_writes_comparison(tmp_path, capsys):
    out = tmp_path / "report"
    args = ["report", "--scenario", "merge_two_routes", "--risk-preset", "published",
            "--runs", "1", "--workers", "1", "--rule-capacity", "2", "--out", str(out)]
    assert main(args) == 0
    rows = json.loads((out / "comparison.json").read_text(encoding="utf-8"))
    assert [r["label"] for r in rows] == ["No intervention", "DCB (C=1)", "Rule-based", "Rule-based + DCB (C=2)"]
    assert [r["capacity"] for r in rows] == [None, 1, None, 2]
    assert rows[0]["metrics"]["run_count"] == 1
    table = (out / "comparison.txt").read_text(encoding="utf-8")
    assert table.splitlines()[0].startswith("Method")
    assert "Rule-based + DCB (C=2)" in capsys.readouterr().out


def test_report_sweeps_for_missing_capacity(tmp_path):
    out = tmp_path / "report"
    args = ["report", "--scenario", "merge_two_routes", "--risk-preset", "published",
            "--runs", "1", "--workers", "1", "--capacities", "1,2", "--out", str(out)]
    assert main(args) == 0
    rows = json.loads((out / "comparison.json").read_text(encoding="utf-8"))
    assert rows[-1]["tactical"] == "rule" and rows[-1]["strategic"] == "exact"
    assert rows[-1]["capacity"] in (1, 2)
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["experiment"]["rule_capacity"] is None
