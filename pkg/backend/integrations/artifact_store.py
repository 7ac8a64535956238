#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Output directory writer: CSV tables, JSON reports and the reproducibility manifest
No wall-clock data is written, so reruns produce identical bytes.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

from config.settings import ARTIFACT_VERSION
from models.airspace import FlightPlan
from models.dcb import DCBSolution
from models.metrics import SweepResult
from models.simulation import EpisodeLog
from models.tactical import CurvePoint

logger = logging.getLogger(__name__)


def _num(value: Any) -> Any:
    if isinstance(value, float):
        return f"{value:.6f}"
    return value


class ArtifactStore:
    """Writes artifacts into one output directory"""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        path = self.out_dir / name
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_num(v) for v in row])
        self.written.append(name)
        return path

    def write_json(self, name: str, data: Any) -> Path:
        path = self.out_dir / name
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
        self.written.append(name)
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        self.written.append(name)
        return path

    def write_manifest(self, subcommand: str, experiment: Dict[str, Any], scenario: Dict[str, Any], seed: int) -> Path:
        """Everything needed to rerun the subcommand and get the same outputs"""
        manifest = {
            "artifact_version": ARTIFACT_VERSION,
            "subcommand": subcommand,
            "experiment": experiment,
            "scenario": scenario,
            "seed": seed,
            "outputs": sorted(set(self.written)),
        }
        path = self.write_json("manifest.json", manifest)
        logger.info(f"✅ {len(set(self.written)) - 1} artifact(s) + manifest written to {self.out_dir}")
        return path


# ---------- row builders ----------

SCHEDULE_HEADER = ["flight_id", "route_id", "origin", "scheduled"]
SOLUTION_HEADER = ["flight_id", "scheduled", "required", "delay"]
HISTOGRAM_HEADER = ["resource", "window", "window_start", "scheduled_count", "required_count"]
EVENTS_HEADER = ["run", "kind", "flight_a", "flight_b", "t_start", "t_end", "min_distance"]
FLIGHTS_HEADER = ["run", "flight_id", "route_id", "S", "R", "T_f", "A_f", "alerts", "ground_delay", "airborne_delay", "status"]
CURVE_HEADER = ["episode", "total", "safety", "time", "action", "nmac", "epsilon"]
SWEEP_HEADER = ["capacity", "est_mac_per_100k_fh", "ci_high", "nmac_per_fh", "lowc_per_fh",
                "mean_ground_delay", "tls_compliant", "tls_compliant_upper"]
SPEED_HEADER = ["t", "flight_id", "speed"]


def schedule_rows(plans: Sequence[FlightPlan]) -> List[List[Any]]:
    return [[p.flight_id, p.route_id, p.origin, p.scheduled_departure] for p in plans]


def solution_rows(plans: Sequence[FlightPlan], sol: DCBSolution) -> List[List[Any]]:
    rows = []
    for p in sorted(plans, key=lambda p: (p.scheduled_departure, p.flight_id)):
        r = sol.required_departures.get(p.flight_id)
        if r is None:
            rows.append([p.flight_id, p.scheduled_departure, "", ""])
        else:
            rows.append([p.flight_id, p.scheduled_departure, r, max(0.0, r - p.scheduled_departure)])
    return rows


def histogram_rows(before: Dict, after: Dict, window_length: float) -> List[List[Any]]:
    keys = sorted(set(before) | set(after))
    return [[res, n, n * window_length, before.get((res, n), 0), after.get((res, n), 0)] for res, n in keys]


def event_rows(logs: Sequence[EpisodeLog]) -> List[List[Any]]:
    return [
        [log.seed, e.kind, e.flight_a, e.flight_b, e.t_start, e.t_end, e.min_distance]
        for log in logs
        for e in log.events
    ]


def flight_rows(logs: Sequence[EpisodeLog]) -> List[List[Any]]:
    return [
        [log.seed, f.flight_id, f.route_id, f.scheduled, "" if f.required is None else f.required,
         f.estimated_time, f.actual_time, f.alerts, f.ground_delay, f.airborne_delay, f.status]
        for log in logs
        for f in log.flights
    ]


def curve_rows(curve: Sequence[CurvePoint]) -> List[List[Any]]:
    return [[p.episode, p.total, p.safety, p.time, p.action, p.nmac, p.epsilon] for p in curve]


def sweep_rows(result: SweepResult) -> List[List[Any]]:
    return [
        [r.capacity, r.est_mac_per_100k_fh, r.ci_high, r.nmac_per_fh, r.lowc_per_fh,
         r.mean_ground_delay, int(r.tls_compliant), int(r.tls_compliant_upper)]
        for r in result.rows
    ]


def speed_rows(log: EpisodeLog) -> List[List[Any]]:
    return [[t, fid, v] for t, fid, v in log.speed_trace]


def run_summary(log: EpisodeLog) -> Dict[str, Any]:
    statuses = {}
    for f in log.flights:
        statuses[f.status] = statuses.get(f.status, 0) + 1
    return {
        "seed": log.seed,
        "strategic_mode": log.strategic_mode,
        "tactical_mode": log.tactical_mode,
        "truncated": log.truncated,
        "end_time": log.end_time,
        "flight_hours": log.total_flight_hours,
        "events": {kind: log.count(kind) for kind in ("LoWC", "NMAC", "MAC")},
        "flights": statuses,
        "released": log.released(),
        "reward_components": log.reward_components,
    }
