#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Airspace service: transit times, demand generation, scenario validation"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.scenario_loader import ScenarioConfig
from errors import RouteNodeError
from models.airspace import AircraftPerformance, AirspaceNetwork, DemandSpec, FlightPlan, Route
from models.dcb import ValidationReport

logger = logging.getLogger(__name__)


def estimate_transit_time(
    route: Route,
    from_node: str,
    to_node: str,
    perf: AircraftPerformance,
) -> float:
    """
    Path distance between two route nodes divided by cruise speed (T_{d,i})

    Args:
        route: route both nodes lie on
        from_node: upstream node id
        to_node: downstream node id (may equal from_node)
        perf: performance envelope (v_cruise used)

    Returns:
        seconds

    Raises:
        RouteNodeError: node not on route, or to_node upstream of from_node
    """
    for node in (from_node, to_node):
        if node not in route.nodes:
            raise RouteNodeError(route.id, node)
    i, j = route.nodes.index(from_node), route.nodes.index(to_node)
    if j < i:
        raise RouteNodeError(route.id, to_node, detail="lies upstream of '%s' on route" % from_node)
    distance = math.fsum(route.leg_lengths[i:j])
    return distance / perf.v_cruise


def resource_offsets(network: AirspaceNetwork, route_id: str) -> Tuple[Tuple[str, float], ...]:
    """(resource node, transit time from origin) for every resource on the route"""
    route = network.routes[route_id]
    return tuple(
        (node, estimate_transit_time(route, route.origin, node, network.performance))
        for node in network.resources_on(route_id)
    )


def make_plan(network: AirspaceNetwork, flight_id: str, route_id: str, scheduled: float) -> FlightPlan:
    route = network.routes[route_id]
    return FlightPlan(
        flight_id=flight_id,
        route_id=route_id,
        origin=route.origin,
        scheduled_departure=scheduled,
        required_departure=scheduled,
        resource_offsets=resource_offsets(network, route_id),
    )


def generate_schedule(
    spec: DemandSpec,
    routes: Sequence[Route],
    seed: int,
    network: Optional[AirspaceNetwork] = None,
) -> List[FlightPlan]:
    """
    Beta-distributed departure intervals, cumulated per route

    Args:
        spec: demand specification
        routes: routes receiving demand (order fixes the random stream)
        seed: generator seed
        network: when given, per-resource transit offsets are attached to each plan

    Returns:
        flight plans sorted by (scheduled departure, flight id), R initialised to S
    """
    rng = np.random.default_rng(seed)
    a, b = spec.beta_shape
    plans: List[FlightPlan] = []
    for route in routes:
        if spec.flights_per_route <= 0:
            continue
        low, high = spec.range_for(route.id)
        # first departure at start_time, then flights_per_route - 1 intervals
        unit = rng.beta(a, b, size=spec.flights_per_route - 1)
        intervals = low + unit * (high - low)
        departures = spec.start_time + np.concatenate(([0.0], np.cumsum(intervals)))
        for k, s in enumerate(departures):
            flight_id = f"{route.id}-{k:03d}"
            if network is not None:
                plans.append(make_plan(network, flight_id, route.id, float(s)))
            else:
                plans.append(FlightPlan(
                    flight_id=flight_id,
                    route_id=route.id,
                    origin=route.origin,
                    scheduled_departure=float(s),
                    required_departure=float(s),
                ))
    plans.sort(key=lambda p: (p.scheduled_departure, p.flight_id))
    return plans


def validate_scenario(config: ScenarioConfig) -> ValidationReport:
    """
    Check every airspace/tactical invariant of a parsed scenario; never repairs

    Args:
        config: schema-valid scenario

    Returns:
        ValidationReport (empty when valid)
    """
    report = ValidationReport()
    node_ids = [n.id for n in config.nodes]
    known = set(node_ids)

    seen = set()
    for i, node in enumerate(config.nodes):
        if node.id in seen:
            report.add("scenario", f"nodes[{i}].id", f"duplicate node id '{node.id}'")
        seen.add(node.id)
        if not (math.isfinite(node.x) and math.isfinite(node.y)):
            report.add("scenario", f"nodes[{i}]", f"node '{node.id}' has non-finite coordinates")

    positions = {n.id: (n.x, n.y) for n in config.nodes}
    route_ids = set()
    for i, route in enumerate(config.routes):
        path = f"routes[{i}]"
        if route.id in route_ids:
            report.add("scenario", f"{path}.id", f"duplicate route id '{route.id}'")
        route_ids.add(route.id)
        if len(route.nodes) < 2:
            report.add("scenario", f"{path}.nodes", f"route '{route.id}' needs at least 2 nodes")
        unknown = [n for n in route.nodes if n not in known]
        if unknown:
            report.add("scenario", f"{path}.nodes", f"route '{route.id}' references unknown node(s) {unknown}")
            continue
        for a, b in zip(route.nodes[:-1], route.nodes[1:]):
            if a == b:
                report.add("scenario", f"{path}.nodes", f"route '{route.id}' repeats node '{a}' consecutively")
            elif math.hypot(positions[b][0] - positions[a][0], positions[b][1] - positions[a][1]) <= 0.0:
                report.add("scenario", f"{path}.nodes", f"route '{route.id}' has a zero-length leg {a}->{b}")

    on_some_route = {n for r in config.routes for n in r.nodes}
    for i, res in enumerate(config.resources):
        path = f"resources[{i}]"
        if res.capacity < 1:
            report.add("scenario", f"{path}.capacity", f"resource '{res.node_id}' capacity must be >= 1 (got {res.capacity})")
        window = res.window_length if res.window_length is not None else config.dcb.window_length
        if window <= 0:
            report.add("scenario", f"{path}.window_length", f"resource '{res.node_id}' window length must be > 0")
        elif window != config.dcb.window_length:
            report.add("scenario", f"{path}.window_length",
                       f"resource '{res.node_id}' window {window} differs from dcb.window_length {config.dcb.window_length}")
        if res.node_id not in known:
            report.add("scenario", f"{path}.node_id", f"resource '{res.node_id}' is not a known node")
        elif res.node_id not in on_some_route:
            report.add("scenario", f"{path}.node_id", f"resource '{res.node_id}' lies on no route")

    perf = config.performance
    if not (0 < perf.v_min <= perf.v_cruise <= perf.v_max):
        report.add("scenario", "performance", "requires 0 < v_min <= v_cruise <= v_max")
    if perf.dv <= 0:
        report.add("scenario", "performance.dv", "dv must be > 0")
    if perf.accel <= 0:
        report.add("scenario", "performance.accel", "accel must be > 0")

    demand = config.demand
    if demand.mean_interval <= 0:
        report.add("scenario", "demand.mean_interval", "mean_interval must be > 0")
    if demand.flights_per_route < 0:
        report.add("scenario", "demand.flights_per_route", "flights_per_route must be >= 0")
    if min(demand.beta_shape) <= 0:
        report.add("scenario", "demand.beta_shape", "beta shape parameters must be positive")
    for route_id, lam in demand.route_mean_intervals.items():
        if route_id not in route_ids:
            report.add("scenario", f"demand.route_mean_intervals.{route_id}", "unknown route")
        if lam <= 0:
            report.add("scenario", f"demand.route_mean_intervals.{route_id}", "mean interval must be > 0")
    if demand.interval_range is not None and demand.mean_interval > 0 and min(demand.beta_shape) > 0:
        low, high = demand.interval_range
        a, b = demand.beta_shape
        mapped_mean = low + (a / (a + b)) * (high - low)
        if low > high or low < 0:
            report.add("scenario", "demand.interval_range", "requires 0 <= min <= max")
        elif abs(mapped_mean - demand.mean_interval) > demand.mean_tolerance * demand.mean_interval:
            report.add("scenario", "demand.interval_range",
                       f"mapped mean {mapped_mean:.3f}s differs from mean_interval {demand.mean_interval}s beyond tolerance")

    th = config.thresholds
    if not (0 <= th.d_mac < th.d_nmac < th.d_lowc <= th.observation_range):
        report.add("scenario", "thresholds", "requires d_mac < d_nmac < d_lowc <= observation_range")

    rp = config.rule_policy
    if not (th.d_nmac < rp.d_ls < rp.d_hs <= th.observation_range):
        report.add("scenario", "rule_policy", "requires d_nmac < d_ls < d_hs <= observation_range")

    rw = config.reward
    for name in ("alpha", "delta", "eta", "psi"):
        value = getattr(rw, name)
        if value is not None and value < 0:
            report.add("scenario", f"reward.{name}", f"{name} must be >= 0")

    dcb = config.dcb
    if dcb.window_length <= 0:
        report.add("scenario", "dcb.window_length", "window length must be > 0")
    if dcb.departure_separation < 0:
        report.add("scenario", "dcb.departure_separation", "departure separation must be >= 0")

    eng = config.engine
    if not (0 < eng.step_dt <= eng.decision_dt):
        report.add("scenario", "engine", "requires 0 < step_dt <= decision_dt")
    if eng.max_sim_time <= 0:
        report.add("scenario", "engine.max_sim_time", "max_sim_time must be > 0")

    lr = config.learner
    if not (0 <= lr.epsilon_end <= 1 and 0 <= lr.epsilon_start <= 1):
        report.add("scenario", "learner", "exploration probabilities must lie in [0, 1]")
    if lr.detection_mode not in ("all", "forward"):
        report.add("scenario", "learner.detection_mode", "must be 'all' or 'forward'")
    if lr.update_period < 1:
        report.add("scenario", "learner.update_period", "update_period must be >= 1")

    risk = config.risk
    for name in ("p_mac_given_nmac", "acasx_risk_ratio"):
        if not 0 <= getattr(risk, name) <= 1:
            report.add("scenario", f"risk.{name}", "must lie in [0, 1]")

    if config.flights is not None:
        for i, flight in enumerate(config.flights):
            if flight.route_id not in route_ids:
                report.add("scenario", f"flights[{i}].route_id", f"flight '{flight.flight_id}' uses unknown route")

    if report.violations:
        logger.warning(f"⚠️ scenario '{config.name}': {len(report.violations)} violation(s)")
    return report


class AirspaceService:
    """Scenario-bound airspace operations"""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.network = config.network()

    def transit_time(self, route_id: str, from_node: str, to_node: str) -> float:
        return estimate_transit_time(self.network.routes[route_id], from_node, to_node, self.network.performance)

    def unobstructed_time(self, route_id: str) -> float:
        """T_f: route length at cruise speed"""
        return self.network.routes[route_id].length / self.network.performance.v_cruise

    def flight_plans(self, seed: int) -> List[FlightPlan]:
        """Explicit flight table when the scenario has one, otherwise generated demand"""
        if self.config.flights is not None:
            plans = [
                make_plan(self.network, f.flight_id, f.route_id, f.scheduled_departure)
                for f in self.config.flights
            ]
            plans.sort(key=lambda p: (p.scheduled_departure, p.flight_id))
            return plans
        routes = [self.network.routes[r.id] for r in self.config.routes]
        return generate_schedule(self.config.demand_spec(), routes, seed, network=self.network)
