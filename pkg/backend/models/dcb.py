#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Demand capacity balancing data models"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

# Keeps n*W - T + T from landing one window early through float rounding
WINDOW_EPS = 1e-9


def window_index(t: float, window_length: float) -> int:
    """Half-open window membership: t in [n*W, (n+1)*W)"""
    return int(math.floor((t + WINDOW_EPS) / window_length))


@dataclass(frozen=True)
class DCBConfig:
    """Window length, departure separation and capacities"""
    window_length: float = 200.0  # W
    departure_separation: float = 30.0  # Delta
    capacities: Dict[str, int] = field(default_factory=dict)  # resource -> C^p
    horizon: Optional[float] = None  # last window end; derived when None
    max_nodes: int = 200_000  # exact search budget

    def window_start(self, n: int) -> float:
        return n * self.window_length


@dataclass
class WindowAssignment:
    """omega: the window each (resource, flight) pair occupies"""
    entries: Dict[Tuple[str, str], int] = field(default_factory=dict)  # (resource, flight) -> n
    window_length: float = 200.0

    def window_start(self, n: int) -> float:
        return n * self.window_length

    def occupancy(self) -> Dict[Tuple[str, int], int]:
        counts: Dict[Tuple[str, int], int] = {}
        for (resource, _flight), n in self.entries.items():
            counts[(resource, n)] = counts.get((resource, n), 0) + 1
        return counts


@dataclass
class DCBSolution:
    """Solver output"""
    required_departures: Dict[str, float]
    assignment: WindowAssignment
    total_delay: float
    status: str  # "optimal" | "feasible" | "infeasible"
    binding_resource: Optional[str] = None
    solver: str = "exact"
    nodes_explored: int = 0


@dataclass(frozen=True)
class Violation:
    """One failed check in a validation report"""
    kind: str  # capacity | separation | non_anticipation | assignment | objective | scenario
    path: str
    message: str


@dataclass
class ValidationReport:
    """Structured list of violations; empty means valid"""
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, path: str, message: str) -> None:
        self.violations.append(Violation(kind=kind, path=path, message=message))

    def of_kind(self, kind: str) -> List[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def to_dicts(self) -> List[Dict[str, str]]:
        return [{"kind": v.kind, "path": v.path, "message": v.message} for v in self.violations]


@dataclass(frozen=True)
class DepartureRequest:
    """Online departure request fed to the heuristic"""
    flight_id: str
    route_id: str
    origin: str
    request_time: float
    resource_offsets: Tuple[Tuple[str, float], ...] = ()
