#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Conflict management experiment runner (CLI)

Subcommands: validate | schedule | dcb | simulate | montecarlo | sweep | train | equilibria | report
Every subcommand writes its artifacts plus manifest.json into --out.
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional

from config.settings import DEMAND_PRESETS, LOG_LEVEL, default_workers
from conflict_engine import IntegratedConflictEngine
from errors import ConflictPlatformError, DCBInfeasibleError, ExperimentConfigError
from integrations.artifact_store import (
    CURVE_HEADER,
    EVENTS_HEADER,
    FLIGHTS_HEADER,
    HISTOGRAM_HEADER,
    SCHEDULE_HEADER,
    SOLUTION_HEADER,
    SPEED_HEADER,
    SWEEP_HEADER,
    ArtifactStore,
    curve_rows,
    event_rows,
    flight_rows,
    histogram_rows,
    run_summary,
    schedule_rows,
    solution_rows,
    speed_rows,
    sweep_rows,
)
from integrations.policy_store import load_policy, save_policy
from models.simulation import StrategicMode, TacticalMode
from models.tactical import DetectionMode
from services.metrics_service import aggregate, format_comparison_table, format_sweep_table
from services.policy_learner import episodes_to_threshold

logger = logging.getLogger(__name__)

# built-in values for every experiment key; --config defaults and then flags take precedence
BUILTIN_DEFAULTS: Dict[str, Any] = {
    "scenario": "default",
    "seed": 0,
    "workers": None,
    "capacity": None,
    "demand": None,
    "strategic": "none",
    "tactical": "none",
    "policy_file": None,
    "runs": 30,
    "risk_preset": "calibrated",
    "capacities": "1,2,3,4,5,6,7,8",
    "detection": None,
    "episodes": None,
    "record_speeds": False,
    "game": "merge_cost_table",
    "rule_capacity": None,  # None: largest TLS-compliant capacity from a sweep
    "policy_capacity": None,
    "threshold": None,
    "threshold_window": 10,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="UAM conflict management experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default=None, help="bundled scenario name or JSON path (default: default)")
    common.add_argument("--config", default=None, help="experiment file: {defaults, override} or a manifest.json")
    common.add_argument("--seed", type=int, default=None, help="base seed (default: 0)")
    common.add_argument("--out", default=None, help="output directory (default: out/<subcommand>)")
    common.add_argument("--workers", type=int, default=None, help="worker processes (default: ICMP_WORKERS or CPU count)")
    common.add_argument("--capacity", type=int, default=None, help="capacity applied to every resource")
    common.add_argument("--demand", default=None, help=f"{'/'.join(DEMAND_PRESETS)} or mean interval in seconds")

    strategic = argparse.ArgumentParser(add_help=False)
    strategic.add_argument("--strategic", choices=[m.value for m in StrategicMode], default=None)

    tactical = argparse.ArgumentParser(add_help=False)
    tactical.add_argument("--tactical", choices=[m.value for m in TacticalMode], default=None)
    tactical.add_argument("--policy-file", dest="policy_file", default=None, help="trained policy (tactical policy)")

    runs = argparse.ArgumentParser(add_help=False)
    runs.add_argument("--runs", type=int, default=None, help="Monte Carlo runs (default: 30)")
    runs.add_argument("--risk-preset", dest="risk_preset", choices=["calibrated", "published"], default=None,
                      help="P(MAC|NMAC) from unmitigated runs or the published constant")

    sub.add_parser("validate", parents=[common], help="check a scenario and print its violations")
    sub.add_parser("schedule", parents=[common], help="generate a flight schedule table")
    sub.add_parser("dcb", parents=[common, strategic], help="balance demand and capacity (exact or heuristic)")
    p = sub.add_parser("simulate", parents=[common, strategic, tactical], help="run one episode")
    p.add_argument("--record-speeds", dest="record_speeds", action="store_true", default=None)
    sub.add_parser("montecarlo", parents=[common, strategic, tactical, runs], help="independent episodes + metrics")
    p = sub.add_parser("sweep", parents=[common, tactical, runs], help="estimated MACs per capacity")
    p.add_argument("--capacities", default=None, help="comma separated (default: 1..8)")
    p = sub.add_parser("train", parents=[common, strategic], help="train the shared tabular policy")
    p.add_argument("--detection", choices=[m.value for m in DetectionMode], default=None)
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--policy-file", dest="policy_file", default=None, help="where to write the policy (default: <out>/policy.json)")
    p.add_argument("--threshold", type=float, default=None, help="reward level for episodes-to-threshold")
    p.add_argument("--threshold-window", dest="threshold_window", type=int, default=None)
    p = sub.add_parser("equilibria", parents=[common], help="pure Nash and Stackelberg outcomes of a cost table")
    p.add_argument("--game", default=None, help="bundled game name or JSON path")
    p = sub.add_parser("report", parents=[common, runs], help="method comparison table at one demand level")
    p.add_argument("--policy-file", dest="policy_file", default=None)
    p.add_argument("--rule-capacity", dest="rule_capacity", type=int, default=None)
    p.add_argument("--policy-capacity", dest="policy_capacity", type=int, default=None)
    p.add_argument("--capacities", default=None, help="capacities swept when a DCB capacity is not given (default: 1..8)")
    return parser


def load_experiment_file(path: Optional[str]) -> Dict[str, Any]:
    """
    Returns {"defaults": {...}, "override": {...}, "scenario": {...} | None}

    A manifest written by this tool replays its experiment and inline scenario.
    """
    if path is None:
        return {"defaults": {}, "override": {}, "scenario": None}
    file = Path(path)
    if not file.exists():
        raise ExperimentConfigError(f"config file not found: {path}")
    try:
        with open(file, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ExperimentConfigError(f"malformed config file {path}: {e}") from e
    if "experiment" in data and "scenario" in data:
        return {"defaults": dict(data["experiment"]), "override": {}, "scenario": data["scenario"]}
    unknown = set(data) - {"defaults", "override"}
    if unknown:
        raise ExperimentConfigError(f"config file {path}: unknown top-level keys {sorted(unknown)}")
    return {"defaults": data.get("defaults", {}), "override": data.get("override", {}), "scenario": None}


def resolve_experiment(args: argparse.Namespace, file_defaults: Dict[str, Any]) -> Dict[str, Any]:
    """Flags over config-file defaults over built-in defaults"""
    unknown = set(file_defaults) - set(BUILTIN_DEFAULTS)
    if unknown:
        raise ExperimentConfigError(f"unknown experiment keys in config file: {sorted(unknown)}")
    spec = {}
    for key, builtin in BUILTIN_DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            spec[key] = flag
        elif key in file_defaults:
            spec[key] = file_defaults[key]
        else:
            spec[key] = builtin
    if spec["workers"] is None:
        spec["workers"] = default_workers()
    if spec["runs"] < 1:
        raise ExperimentConfigError(f"--runs must be >= 1 (got {spec['runs']})")
    return spec


def _policy(spec: Dict[str, Any]):
    if spec["policy_file"] is None:
        return None
    return load_policy(spec["policy_file"])


def _capacities(text: str) -> List[int]:
    try:
        values = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as e:
        raise ExperimentConfigError(f"--capacities must be comma separated integers (got '{text}')") from e
    if not values or any(v < 1 for v in values):
        raise ExperimentConfigError("--capacities must list integers >= 1")
    return values


def run_command(command: str, spec: Dict[str, Any], config, store: ArtifactStore, engine: IntegratedConflictEngine) -> None:
    seed = spec["seed"]
    workers = spec["workers"]

    if command == "validate":
        print(json.dumps({"scenario": config.name, "ok": True, "violations": []}, indent=2))

    elif command == "schedule":
        plans = engine.schedule(config, seed)
        store.write_csv("schedule.csv", SCHEDULE_HEADER, schedule_rows(plans))
        print(f"{len(plans)} flights written to {store.out_dir / 'schedule.csv'}")

    elif command == "dcb":
        method = StrategicMode(spec["strategic"])
        if method is StrategicMode.NONE:
            method = StrategicMode.EXACT
            spec["strategic"] = method.value
        plans = engine.schedule(config, seed)
        solution, report, before, after = engine.balance(config, plans, method)
        store.write_csv("solution.csv", SOLUTION_HEADER, solution_rows(plans, solution))
        store.write_csv("histogram.csv", HISTOGRAM_HEADER, histogram_rows(before, after, config.dcb.window_length))
        store.write_json("dcb.json", {
            "solver": solution.solver,
            "status": solution.status,
            "total_delay": solution.total_delay,
            "binding_resource": solution.binding_resource,
            "nodes_explored": solution.nodes_explored,
            "violations": report.to_dicts(),
        })
        if solution.status == "infeasible":
            store.write_manifest(command, spec, config.model_dump(mode="json"), seed)
            raise DCBInfeasibleError(solution.binding_resource)
        print(f"{'flight_id':<12}{'scheduled':>12}{'required':>12}{'delay':>10}")
        for fid, s, r, d in solution_rows(plans, solution):
            print(f"{fid:<12}{s:>12.1f}{r:>12.1f}{d:>10.1f}")
        print(f"status={solution.status} total_delay={solution.total_delay:.1f}s")

    elif command == "simulate":
        log = engine.simulate(config, StrategicMode(spec["strategic"]), TacticalMode(spec["tactical"]), seed,
                              policy=_policy(spec), record_speeds=bool(spec["record_speeds"]))
        store.write_csv("events.csv", EVENTS_HEADER, event_rows([log]))
        store.write_csv("flights.csv", FLIGHTS_HEADER, flight_rows([log]))
        store.write_json("summary.json", run_summary(log))
        if spec["record_speeds"]:
            store.write_csv("speeds.csv", SPEED_HEADER, speed_rows(log))
        print(json.dumps(run_summary(log), indent=2, sort_keys=True))

    elif command == "montecarlo":
        params, calibration = engine.risk_params(config, spec["risk_preset"], seed, workers)
        logs = engine.montecarlo(config, StrategicMode(spec["strategic"]), TacticalMode(spec["tactical"]),
                                 spec["runs"], seed, workers, policy=_policy(spec))
        report = aggregate(logs, params)
        store.write_csv("events.csv", EVENTS_HEADER, event_rows(logs))
        store.write_csv("flights.csv", FLIGHTS_HEADER, flight_rows(logs))
        store.write_json("report.json", {
            "metrics": report.to_dict(),
            "p_mac_given_nmac": params.p_mac_given_nmac,
            "acasx_risk_ratio": params.acasx_risk_ratio,
            "calibration": None if calibration is None else asdict(calibration),
        })
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))

    elif command == "sweep":
        params, _ = engine.risk_params(config, spec["risk_preset"], seed, workers)
        result = engine.sweep(config, TacticalMode(spec["tactical"]), _capacities(spec["capacities"]),
                              spec["runs"], params, seed, workers, policy=_policy(spec))
        store.write_csv("sweep.csv", SWEEP_HEADER, sweep_rows(result))
        table = format_sweep_table(result)
        store.write_text("sweep.txt", table)
        print(table, end="")

    elif command == "train":
        detection = DetectionMode(spec["detection"] or config.learner.detection_mode)
        spec["detection"] = detection.value
        policy, curve = engine.train(config, detection, seed, spec["episodes"], StrategicMode(spec["strategic"]), workers)
        policy_path = Path(spec["policy_file"]) if spec["policy_file"] else store.out_dir / "policy.json"
        save_policy(policy, policy_path)
        store.written.append(policy_path.name)
        store.write_csv("curve.csv", CURVE_HEADER, curve_rows(curve))
        summary = {"episodes": len(curve), "detection_mode": detection.value}
        if spec["threshold"] is not None:
            summary["episodes_to_threshold"] = episodes_to_threshold(curve, spec["threshold"], spec["threshold_window"])
        store.write_json("training.json", summary)
        print(json.dumps(summary, indent=2, sort_keys=True))

    elif command == "equilibria":
        matrix, report = engine.equilibria(spec["game"])
        data = {
            "actions": list(matrix.actions),
            "strict_nash": [list(p) for p in report.strict_nash],
            "weak_nash": [list(p) for p in report.weak_nash],
            "stackelberg": list(report.stackelberg) if report.stackelberg else None,
            "leader_value": report.leader_value,
        }
        store.write_json("equilibria.json", data)
        print("strict pure Nash: " + ", ".join(f"({a}, {b})" for a, b in report.strict_nash))
        print(f"weak pure Nash: {len(report.weak_nash)} profile(s)")
        if report.stackelberg:
            print(f"Stackelberg (aircraft 1 leads): ({report.stackelberg[0]}, {report.stackelberg[1]})")

    elif command == "report":
        params, _ = engine.risk_params(config, spec["risk_preset"], seed, workers)
        rows = engine.compare(config, spec["runs"], params, seed, workers, spec["rule_capacity"],
                              _policy(spec), spec["policy_capacity"], _capacities(spec["capacities"]))
        table = format_comparison_table(rows)
        store.write_text("comparison.txt", table)
        store.write_json("comparison.json", [
            {"label": r.label, "strategic": r.strategic_mode, "tactical": r.tactical_mode,
             "capacity": r.capacity, "metrics": r.report.to_dict()}
            for r in rows
        ])
        print(table, end="")


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        experiment = load_experiment_file(args.config)
        spec = resolve_experiment(args, experiment["defaults"])
        engine = IntegratedConflictEngine()
        config = engine.resolve_scenario(
            spec["scenario"],
            overrides=experiment["override"],
            capacity=spec["capacity"],
            demand=spec["demand"],
            inline=experiment["scenario"],
        )
        store = ArtifactStore(args.out or Path("out") / args.command)
        run_command(args.command, spec, config, store, engine)
        if args.command != "validate":
            store.write_manifest(args.command, spec, config.model_dump(mode="json"), spec["seed"])
        return 0
    except ConflictPlatformError as e:
        print(json.dumps(e.to_dict(), indent=2), file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(json.dumps({"error": "ValueError", "message": str(e)}, indent=2), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
