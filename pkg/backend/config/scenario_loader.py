#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Scenario schema and loader (JSON based)"""

import copy
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from config.settings import GAMES_DIR, SCENARIO_DIR
from errors import ScenarioValidationError
from models.airspace import (
    AircraftPerformance,
    AirspaceNetwork,
    DemandSpec,
    Node,
    Resource,
    Route,
)
from models.dcb import DCBConfig
from models.metrics import RiskModelParams
from models.simulation import EngineConfig
from models.tactical import CostMatrix, RewardParams, RulePolicyParams, SafetyThresholds

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NodeSection(_Section):
    id: str
    x: float
    y: float


class RouteSection(_Section):
    id: str
    nodes: List[str]


class ResourceSection(_Section):
    node_id: str
    capacity: int
    window_length: Optional[float] = None  # falls back to dcb.window_length


class PerformanceSection(_Section):
    v_min: float = 20.0
    v_cruise: float = 50.0
    v_max: float = 70.0
    dv: float = 2.5
    accel: float = 2.0


class DemandSection(_Section):
    mean_interval: float = 30.0
    flights_per_route: int = 10
    beta_shape: Tuple[float, float] = (2.0, 2.0)
    interval_range: Optional[Tuple[float, float]] = None
    mean_tolerance: float = 0.05
    route_mean_intervals: Dict[str, float] = Field(default_factory=dict)
    start_time: float = 0.0


class ThresholdSection(_Section):
    d_mac: float = 10.0
    d_nmac: float = 150.0
    d_lowc: float = 500.0
    observation_range: float = 1500.0


class RewardSection(_Section):
    alpha: Optional[float] = None
    delta: Optional[float] = None
    eta: float = 0.001
    psi: float = 0.01
    max_flight_time: Optional[float] = None
    max_flight_time_factor: float = 3.0


class DCBSection(_Section):
    window_length: float = 200.0
    departure_separation: float = 30.0
    horizon: Optional[float] = None
    max_nodes: int = 200_000


class EngineSection(_Section):
    step_dt: float = 1.0
    decision_dt: float = 5.0
    max_sim_time: float = 7200.0


class RulePolicySection(_Section):
    d_ls: float = 400.0
    d_hs: float = 800.0
    closed_hold_band: bool = True


class LearnerBins(_Section):
    d_goal: int = 10
    speed: int = 5
    leader_distance: int = 12
    relative_speed: int = 5


class LearnerSection(_Section):
    learning_rate: float = 0.2
    discount: float = 0.98
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_episodes: int = 500
    update_period: int = 30
    episodes: int = 1000
    detection_mode: str = "forward"
    pool_size: int = 100
    bins: LearnerBins = Field(default_factory=LearnerBins)


class RiskSection(_Section):
    p_mac_given_nmac: float = 5.038e-3
    acasx_risk_ratio: float = 0.005
    calibrate: bool = True
    calibration_runs: int = 200


class FlightSection(_Section):
    flight_id: str
    route_id: str
    scheduled_departure: float


class ScenarioConfig(_Section):
    """Complete scenario document"""
    name: str = "scenario"
    nodes: List[NodeSection]
    routes: List[RouteSection]
    resources: List[ResourceSection] = Field(default_factory=list)
    performance: PerformanceSection = Field(default_factory=PerformanceSection)
    demand: DemandSection = Field(default_factory=DemandSection)
    thresholds: ThresholdSection = Field(default_factory=ThresholdSection)
    reward: RewardSection = Field(default_factory=RewardSection)
    dcb: DCBSection = Field(default_factory=DCBSection)
    engine: EngineSection = Field(default_factory=EngineSection)
    rule_policy: RulePolicySection = Field(default_factory=RulePolicySection)
    learner: LearnerSection = Field(default_factory=LearnerSection)
    risk: RiskSection = Field(default_factory=RiskSection)
    flights: Optional[List[FlightSection]] = None

    # ---------- domain objects ----------

    def network(self) -> AirspaceNetwork:
        """Resolve geometry; call validate_scenario first for readable failures"""
        nodes = {n.id: Node(id=n.id, x=n.x, y=n.y) for n in self.nodes}
        routes = {}
        for r in self.routes:
            legs = tuple(
                math.hypot(nodes[b].x - nodes[a].x, nodes[b].y - nodes[a].y)
                for a, b in zip(r.nodes[:-1], r.nodes[1:])
            )
            routes[r.id] = Route(id=r.id, nodes=tuple(r.nodes), leg_lengths=legs)
        resources = {
            res.node_id: Resource(
                node_id=res.node_id,
                capacity=res.capacity,
                window_length=res.window_length if res.window_length is not None else self.dcb.window_length,
            )
            for res in self.resources
        }
        return AirspaceNetwork(nodes=nodes, routes=routes, resources=resources, performance=self.aircraft_performance())

    def aircraft_performance(self) -> AircraftPerformance:
        return AircraftPerformance(**self.performance.model_dump())

    def demand_spec(self) -> DemandSpec:
        data = self.demand.model_dump()
        data["beta_shape"] = tuple(data["beta_shape"])
        if data["interval_range"] is not None:
            data["interval_range"] = tuple(data["interval_range"])
        return DemandSpec(**data)

    def dcb_config(self) -> DCBConfig:
        return DCBConfig(
            window_length=self.dcb.window_length,
            departure_separation=self.dcb.departure_separation,
            capacities={res.node_id: res.capacity for res in self.resources},
            horizon=self.dcb.horizon,
            max_nodes=self.dcb.max_nodes,
        )

    def safety_thresholds(self) -> SafetyThresholds:
        return SafetyThresholds(**self.thresholds.model_dump())

    def reward_params(self) -> RewardParams:
        return RewardParams(**self.reward.model_dump())

    def rule_params(self) -> RulePolicyParams:
        return RulePolicyParams(**self.rule_policy.model_dump())

    def engine_config(self) -> EngineConfig:
        return EngineConfig(**self.engine.model_dump())

    def risk_params(self) -> RiskModelParams:
        return RiskModelParams(
            p_mac_given_nmac=self.risk.p_mac_given_nmac,
            acasx_risk_ratio=self.risk.acasx_risk_ratio,
        )

    # ---------- derived scenarios ----------

    def with_overrides(self, overrides: Dict[str, Any]) -> "ScenarioConfig":
        """Deep-merge a partial document and re-validate"""
        merged = deep_merge(self.model_dump(mode="json"), overrides)
        return parse_scenario(merged, source=f"{self.name}+override")

    def with_capacity(self, capacity: int) -> "ScenarioConfig":
        """Same capacity applied to every resource"""
        resources = [res.model_copy(update={"capacity": capacity}) for res in self.resources]
        return self.model_copy(update={"resources": resources})

    def with_mean_interval(self, mean_interval: float) -> "ScenarioConfig":
        demand = self.demand.model_copy(update={"mean_interval": mean_interval, "interval_range": None})
        return self.model_copy(update={"demand": demand})

    def with_explicit_flights(self, flights: Optional[List[Dict[str, Any]]]) -> "ScenarioConfig":
        parsed = None if flights is None else [FlightSection(**f) for f in flights]
        return self.model_copy(update={"flights": parsed})


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; lists and scalars from override replace base"""
    result = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = deep_merge(result[key], value)
        else:
            result[key] = copy.deepcopy(value)
    return result


def parse_scenario(data: Dict[str, Any], source: str = "<dict>") -> ScenarioConfig:
    """
    Schema-validate a scenario document

    Args:
        data: decoded JSON document
        source: label used in error messages

    Returns:
        ScenarioConfig

    Raises:
        ScenarioValidationError: unknown keys or wrong types (violation paths included)
    """
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        violations = [
            {
                "kind": "scenario",
                "path": ".".join(str(part) for part in err["loc"]),
                "message": err["msg"],
            }
            for err in e.errors()
        ]
        raise ScenarioValidationError(f"invalid scenario document: {source}", violations) from e


class ScenarioLoader:
    """Scenario / game file loader with a per-instance cache"""

    def __init__(self, scenarios_dir: Optional[Union[str, Path]] = None, games_dir: Optional[Union[str, Path]] = None):
        """
        Args:
            scenarios_dir: directory holding *.json scenarios (defaults to the bundled set)
            games_dir: directory holding *.json cost matrices
        """
        self.scenarios_dir = Path(scenarios_dir) if scenarios_dir else SCENARIO_DIR
        self.games_dir = Path(games_dir) if games_dir else GAMES_DIR
        self._cache: Dict[str, ScenarioConfig] = {}

    def _resolve(self, name_or_path: Union[str, Path], directory: Path) -> Path:
        path = Path(name_or_path)
        if path.suffix == ".json" and path.exists():
            return path
        candidate = directory / (path.name if path.suffix == ".json" else f"{path.name}.json")
        if candidate.exists():
            return candidate
        available = sorted(p.stem for p in directory.glob("*.json")) if directory.exists() else []
        raise ScenarioValidationError(
            f"scenario file not found: {name_or_path} (available: {', '.join(available) or 'none'})",
            [{"kind": "scenario", "path": str(name_or_path), "message": "file not found"}],
        )

    def get_scenario(self, name_or_path: Union[str, Path]) -> ScenarioConfig:
        """
        Load a scenario by bundled name (e.g. "default") or by path

        Args:
            name_or_path: bundled scenario name or path to a JSON file

        Returns:
            ScenarioConfig (schema-validated, invariants not yet checked)
        """
        key = str(name_or_path)
        if key in self._cache:
            return self._cache[key]

        filepath = self._resolve(name_or_path, self.scenarios_dir)
        try:
            with open(filepath, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            logger.error(f"❌ JSON parse error: {filepath} - {e}")
            raise ScenarioValidationError(
                f"malformed JSON: {filepath}",
                [{"kind": "scenario", "path": str(filepath), "message": str(e)}],
            ) from e

        scenario = parse_scenario(data, source=str(filepath))
        self._cache[key] = scenario
        logger.debug(f"✅ scenario loaded: {filepath}")
        return scenario

    def load_game(self, name_or_path: Union[str, Path] = "merge_cost_table") -> CostMatrix:
        """Cost matrix document: {"actions": [...], "payoffs": [[[p1, p2], ...], ...]}"""
        filepath = self._resolve(name_or_path, self.games_dir)
        with open(filepath, "r", encoding="utf-8") as f:
            data = json.load(f)
        return CostMatrix.from_pairs(data["payoffs"], data.get("actions", ("speed_up", "hold", "slow_down")))
