#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Fast-time simulation data models"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from models.airspace import FlightPlan
from models.dcb import DCBSolution


class Phase(Enum):
    PRE_DEPARTURE = "pre-departure"
    AIRBORNE = "airborne"
    LANDED = "landed"
    REMOVED = "removed"


class StrategicMode(Enum):
    NONE = "none"
    EXACT = "exact"
    HEURISTIC = "heuristic"


class TacticalMode(Enum):
    NONE = "none"
    RULE = "rule"
    POLICY = "policy"


@dataclass(frozen=True)
class EngineConfig:
    step_dt: float = 1.0  # seconds
    decision_dt: float = 5.0  # seconds
    max_sim_time: float = 7200.0  # seconds


@dataclass
class AircraftState:
    """Mutable per-aircraft state owned by one episode"""
    flight_id: str
    route_id: str
    scheduled_departure: float
    release_time: Optional[float] = None  # R_f once released
    arc_position: float = 0.0
    speed: float = 0.0
    target_speed: float = 0.0
    phase: Phase = Phase.PRE_DEPARTURE
    airborne_elapsed: float = 0.0
    alerts: int = 0
    actual_time: Optional[float] = None  # A_f
    min_distance_since_decision: float = float("inf")


@dataclass(frozen=True)
class Event:
    """Maximal interval below one separation threshold"""
    kind: str  # LoWC | NMAC | MAC
    flight_a: str
    flight_b: str
    t_start: float
    t_end: float
    min_distance: float


@dataclass(frozen=True)
class FlightRecord:
    flight_id: str
    route_id: str
    scheduled: float  # S_f
    required: Optional[float]  # R_f (None when never released)
    estimated_time: float  # T_f
    actual_time: float  # A_f
    alerts: int
    status: str  # Phase value at episode end

    @property
    def ground_delay(self) -> float:
        if self.required is None:
            return 0.0
        return max(0.0, self.required - self.scheduled)

    @property
    def airborne_delay(self) -> float:
        return max(0.0, self.actual_time - self.estimated_time)


@dataclass
class EpisodeLog:
    """Everything one episode produced"""
    seed: int
    strategic_mode: str
    tactical_mode: str
    min_distances: List[float] = field(default_factory=list)  # per step, inf when < 2 airborne
    events: List[Event] = field(default_factory=list)
    flights: List[FlightRecord] = field(default_factory=list)
    truncated: bool = False
    end_time: float = 0.0
    reward_components: Dict[str, float] = field(default_factory=dict)
    speed_trace: List[Tuple[float, str, float]] = field(default_factory=list)

    @property
    def total_flight_hours(self) -> float:
        return sum(f.actual_time for f in self.flights) / 3600.0

    def count(self, kind: str) -> int:
        return sum(1 for e in self.events if e.kind == kind)

    def released(self) -> int:
        return sum(1 for f in self.flights if f.required is not None)

    def by_status(self, status: str) -> int:
        return sum(1 for f in self.flights if f.status == status)


@dataclass(frozen=True)
class ScheduleTable:
    """One flight schedule table, optionally balanced in advance"""
    plans: Tuple[FlightPlan, ...]
    solution: Optional[DCBSolution] = None
