#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Airspace data models: nodes, routes, resources, performance, demand, flight plans"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple


@dataclass(frozen=True)
class Node:
    """Waypoint / vertiport in the local planar frame"""
    id: str
    x: float  # meters
    y: float  # meters

    @property
    def position(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Route:
    """Ordered node sequence, origin first and destination last"""
    id: str
    nodes: Tuple[str, ...]
    leg_lengths: Tuple[float, ...]  # meters, one per consecutive node pair

    @property
    def length(self) -> float:
        return math.fsum(self.leg_lengths)

    @property
    def origin(self) -> str:
        return self.nodes[0]

    @property
    def destination(self) -> str:
        return self.nodes[-1]


@dataclass(frozen=True)
class Resource:
    """Capacity-constrained merge/crossing point"""
    node_id: str
    capacity: int  # operations per window (C^p)
    window_length: float  # seconds (W)


@dataclass(frozen=True)
class AircraftPerformance:
    """Speed envelope shared by every operation"""
    v_min: float = 20.0  # m/s
    v_cruise: float = 50.0  # m/s
    v_max: float = 70.0  # m/s
    dv: float = 2.5  # m/s per advisory
    accel: float = 2.0  # m/s^2

    def clamp(self, speed: float) -> float:
        return min(self.v_max, max(self.v_min, speed))


@dataclass(frozen=True)
class DemandSpec:
    """Beta-distributed departure intervals per route"""
    mean_interval: float  # seconds (lambda)
    flights_per_route: int
    beta_shape: Tuple[float, float] = (2.0, 2.0)
    interval_range: Optional[Tuple[float, float]] = None  # derived from lambda when None
    mean_tolerance: float = 0.05  # relative
    route_mean_intervals: Dict[str, float] = field(default_factory=dict)
    start_time: float = 0.0

    def mean_for(self, route_id: str) -> float:
        return self.route_mean_intervals.get(route_id, self.mean_interval)

    def range_for(self, route_id: str) -> Tuple[float, float]:
        """Interval support; defaults to [lambda/2, lambda/2 + (lambda/2)/m] so the mapped mean is lambda"""
        lam = self.mean_for(route_id)
        if self.interval_range is not None and route_id not in self.route_mean_intervals:
            return self.interval_range
        a, b = self.beta_shape
        unit_mean = a / (a + b)
        low = 0.5 * lam
        return (low, low + (lam - low) / unit_mean)


@dataclass(frozen=True)
class FlightPlan:
    """One operation: scheduled/required departure and per-resource transit offsets"""
    flight_id: str
    route_id: str
    origin: str
    scheduled_departure: float  # S
    required_departure: float  # R, >= S
    resource_offsets: Tuple[Tuple[str, float], ...] = ()  # (resource node, T_{d,i}) along the route

    def with_required(self, required_departure: float) -> "FlightPlan":
        return replace(self, required_departure=required_departure)

    def eta_at_resource(self, node_id: str, required: bool = True) -> float:
        """Arrival time at a resource from the required (or scheduled) departure"""
        departure = self.required_departure if required else self.scheduled_departure
        for node, offset in self.resource_offsets:
            if node == node_id:
                return departure + offset
        raise KeyError(f"resource '{node_id}' is not on route '{self.route_id}'")


@dataclass(frozen=True)
class AirspaceNetwork:
    """Resolved network: geometry lookups shared by solvers and the simulator"""
    nodes: Dict[str, Node]
    routes: Dict[str, Route]
    resources: Dict[str, Resource]
    performance: AircraftPerformance

    def node_arcs(self, route_id: str) -> List[float]:
        """Cumulative arc position of every node on the route"""
        route = self.routes[route_id]
        arcs = [0.0]
        for leg in route.leg_lengths:
            arcs.append(arcs[-1] + leg)
        return arcs

    def resources_on(self, route_id: str) -> List[str]:
        """Resource node ids in the order the route visits them"""
        return [n for n in self.routes[route_id].nodes if n in self.resources]
