#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Airspace tests: transit times, demand generation, scenario validation
"""

import numpy as np
import pytest

from config.scenario_loader import parse_scenario
from errors import RouteNodeError, ScenarioValidationError
from models.airspace import AircraftPerformance, DemandSpec, Route
from services.airspace_service import AirspaceService, estimate_transit_time, generate_schedule, validate_scenario


def test_transit_time_single_leg():
    route = Route(id="R", nodes=("A", "B"), leg_lengths=(6000.0,))
    assert estimate_transit_time(route, "A", "B", AircraftPerformance(v_cruise=60.0, v_max=70.0)) == pytest.approx(100.0)


def test_transit_time_same_node_is_zero():
    route = Route(id="R", nodes=("A", "B"), leg_lengths=(6000.0,))
    assert estimate_transit_time(route, "B", "B", AircraftPerformance()) == 0.0


def test_transit_time_sums_legs():
    route = Route(id="R", nodes=("A", "B", "C"), leg_lengths=(3000.0, 4500.0))
    perf = AircraftPerformance(v_cruise=50.0)
    per_leg = estimate_transit_time(route, "A", "B", perf) + estimate_transit_time(route, "B", "C", perf)
    assert estimate_transit_time(route, "A", "C", perf) == pytest.approx(150.0)
    assert per_leg == pytest.approx(150.0)


def test_transit_time_rejects_foreign_and_upstream_nodes():
    route = Route(id="R", nodes=("A", "B", "C"), leg_lengths=(3000.0, 4500.0))
    with pytest.raises(RouteNodeError) as err:
        estimate_transit_time(route, "A", "Z", AircraftPerformance())
    assert err.value.route_id == "R" and err.value.node_id == "Z"
    with pytest.raises(RouteNodeError):
        estimate_transit_time(route, "C", "A", AircraftPerformance())


def test_service_transit_times_from_scenario(worked_config):
    service = AirspaceService(worked_config)
    assert service.transit_time("R", "O", "P") == pytest.approx(100.0)
    assert service.unobstructed_time("R") == pytest.approx(200.0)
    plan = service.flight_plans(seed=0)[0]
    assert plan.resource_offsets == (("P", pytest.approx(100.0)),)


def test_eta_at_resource_uses_required_or_scheduled(worked_config):
    plan = AirspaceService(worked_config).flight_plans(seed=0)[1].with_required(100.0)
    assert plan.eta_at_resource("P") == pytest.approx(200.0)
    assert plan.eta_at_resource("P", required=False) == pytest.approx(110.0)
    with pytest.raises(KeyError):
        plan.eta_at_resource("Q")


def _routes():
    return [Route(id="R-1", nodes=("O", "D"), leg_lengths=(6000.0,))]


def test_schedule_empty_when_no_flights():
    spec = DemandSpec(mean_interval=30.0, flights_per_route=0)
    assert generate_schedule(spec, _routes(), seed=1) == []


def test_schedule_constant_intervals():
    spec = DemandSpec(mean_interval=30.0, flights_per_route=3, interval_range=(30.0, 30.0))
    plans = generate_schedule(spec, _routes(), seed=7)
    assert [p.scheduled_departure for p in plans] == pytest.approx([0.0, 30.0, 60.0])
    assert all(p.required_departure == p.scheduled_departure for p in plans)


def test_schedule_mean_interval_matches_demand():
    spec = DemandSpec(mean_interval=30.0, flights_per_route=1001)
    plans = generate_schedule(spec, _routes(), seed=3)
    intervals = np.diff([p.scheduled_departure for p in plans])
    assert len(intervals) == 1000
    assert abs(intervals.mean() - 30.0) <= 0.05 * 30.0
    low, high = spec.range_for("R-1")
    assert intervals.min() >= low and intervals.max() <= high


def test_schedule_is_seed_deterministic():
    spec = DemandSpec(mean_interval=60.0, flights_per_route=5)
    assert generate_schedule(spec, _routes(), seed=11) == generate_schedule(spec, _routes(), seed=11)
    assert generate_schedule(spec, _routes(), seed=11) != generate_schedule(spec, _routes(), seed=12)


def test_default_scenario_is_valid(default_config):
    assert validate_scenario(default_config).ok


def test_zero_capacity_names_resource(default_config):
    broken = default_config.with_overrides({
        "resources": [{"node_id": "N-1", "capacity": 0, "window_length": 200.0}],
    })
    report = validate_scenario(broken)
    assert not report.ok
    assert any("N-1" in v.message and v.path.startswith("resources[0]") for v in report.violations)


def test_unknown_route_node_names_route(default_config):
    broken = default_config.with_overrides({
        "routes": [{"id": "R-X", "nodes": ["N-7", "NOWHERE"]}],
        "resources": [],
    })
    report = validate_scenario(broken)
    assert any("R-X" in v.message for v in report.violations)


def test_threshold_ordering_is_checked(default_config):
    broken = default_config.with_overrides({"thresholds": {"d_nmac": 600.0}})
    paths = [v.path for v in validate_scenario(broken).violations]
    assert "thresholds" in paths


def test_unknown_keys_are_schema_errors():
    with pytest.raises(ScenarioValidationError) as err:
        parse_scenario({"nodes": [], "routes": [], "wind": {"speed": 3}})
    assert any(v["path"] == "wind" for v in err.value.violations)


def test_explicit_flight_table_is_used(worked_config):
    service = AirspaceService(worked_config)
    plans = service.flight_plans(seed=123)
    assert [p.flight_id for p in plans] == ["F-1", "F-2", "F-3"]
    assert plans[0].resource_offsets == (("P", pytest.approx(100.0)),)
    assert service.unobstructed_time("R") == pytest.approx(200.0)


def test_generated_plans_carry_resource_offsets(default_config):
    plans = AirspaceService(default_config).flight_plans(seed=0)
    assert len(plans) == 30
    by_route = {p.route_id: p for p in plans}
    assert [node for node, _t in by_route["R-N7"].resource_offsets] == ["N-1", "N-2"]
    assert [node for node, _t in by_route["R-M2"].resource_offsets] == ["N-2"]
    assert [(p.scheduled_departure, p.flight_id) for p in plans] == sorted((p.scheduled_departure, p.flight_id) for p in plans)
