#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Simulation engine tests: kinematics, event detection, episodes, Monte Carlo
"""

import math

import pytest

from conftest import make_plan
from errors import DCBInfeasibleError, ExperimentConfigError
from models.metrics import RiskModelParams
from models.simulation import Phase, StrategicMode, TacticalMode
from models.tactical import SafetyThresholds
from services.airspace_service import AirspaceService
from services.metrics_service import aggregate
from services.simulation_engine import (
    EventTracker,
    PlannedRelease,
    SimulationEngine,
    World,
    monte_carlo,
    run_episode,
    separated_departures,
    step,
)

THRESHOLDS = SafetyThresholds()


def single_flight(config):
    return config.with_explicit_flights([{"flight_id": "F-1", "route_id": "R", "scheduled_departure": 0.0}])


def fresh_world(config):
    service = AirspaceService(config)
    plans = service.flight_plans(seed=0)
    release = PlannedRelease({p.flight_id: p.scheduled_departure for p in plans})
    return World(service.network, plans, release, {p.flight_id: 1e9 for p in plans})


# ---------- step ----------

def test_release_and_cruise(worked_config):
    world = fresh_world(single_flight(worked_config))
    step(world, 1.0)
    state = world.aircraft["F-1"]
    assert state.phase is Phase.AIRBORNE
    assert state.release_time == 0.0
    assert state.speed == 50.0
    assert state.arc_position == pytest.approx(50.0)
    assert world.t == 1.0


def test_speed_ramp_is_limited(worked_config):
    world = fresh_world(single_flight(worked_config))
    step(world, 1.0)
    world.aircraft["F-1"].target_speed = 55.0
    step(world, 1.0)
    assert world.aircraft["F-1"].speed == pytest.approx(52.0)
    assert world.aircraft["F-1"].arc_position == pytest.approx(102.0)


def test_landed_aircraft_is_frozen(worked_config):
    world = fresh_world(single_flight(worked_config))
    for _ in range(200):
        step(world, 1.0)
    state = world.aircraft["F-1"]
    assert state.phase is Phase.LANDED
    snapshot = (state.arc_position, state.speed, state.actual_time, state.airborne_elapsed)
    for _ in range(5):
        step(world, 1.0)
    assert (state.arc_position, state.speed, state.actual_time, state.airborne_elapsed) == snapshot
    assert world.finished()


def test_late_release_flies_part_of_step(worked_config):
    config = worked_config.with_explicit_flights([{"flight_id": "F-1", "route_id": "R", "scheduled_departure": 0.5}])
    world = fresh_world(config)
    step(world, 1.0)
    assert world.aircraft["F-1"].arc_position == pytest.approx(25.0)


def test_separated_departures_fifo():
    plans = [make_plan("F-1", 0.0, []), make_plan("F-2", 10.0, []), make_plan("F-3", 12.0, [], origin="Q")]
    assert separated_departures(plans, 30.0) == {"F-1": 0.0, "F-2": 30.0, "F-3": 12.0}


# ---------- events ----------

def trace(distances):
    tracker = EventTracker(THRESHOLDS)
    for t, d in enumerate(distances):
        tracker.observe_pair("A", "B", d, float(t))
    tracker.close_all(float(len(distances)))
    return tracker.sorted_events()


def kinds(events):
    return [e.kind for e in events]


def test_single_lowc_event():
    events = trace([600.0, 480.0, 600.0])
    assert kinds(events) == ["LoWC"]
    assert events[0].min_distance == 480.0
    assert (events[0].t_start, events[0].t_end) == (1.0, 2.0)


def test_nmac_nests_in_lowc():
    events = trace([600.0, 140.0, 600.0])
    assert kinds(events) == ["LoWC", "NMAC"]


def test_two_dips_give_two_events():
    events = trace([600.0, 450.0, 520.0, 470.0, 600.0])
    assert kinds(events) == ["LoWC", "LoWC"]
    assert [e.min_distance for e in events] == [450.0, 470.0]


def test_threshold_distance_is_not_an_event():
    assert trace([600.0, 500.0, 600.0]) == []


def test_open_event_closed_when_pair_disappears():
    tracker = EventTracker(THRESHOLDS)
    tracker.observe_pair("B", "A", 100.0, 3.0)
    tracker.close_missing([], 4.0)
    events = tracker.sorted_events()
    assert kinds(events) == ["LoWC", "NMAC"]
    assert all((e.flight_a, e.flight_b, e.t_end) == ("A", "B", 4.0) for e in events)


# ---------- episodes ----------

def test_single_flight_flies_unobstructed_time(worked_config):
    log = run_episode(single_flight(worked_config), StrategicMode.NONE, TacticalMode.NONE, seed=0)
    flight = log.flights[0]
    assert flight.actual_time == pytest.approx(flight.estimated_time)
    assert flight.estimated_time == pytest.approx(200.0)
    assert log.events == [] and flight.alerts == 0
    assert not log.truncated
    assert all(math.isinf(d) for d in log.min_distances)


def test_unmitigated_merge_loses_separation(merge_config):
    log = run_episode(merge_config, StrategicMode.NONE, TacticalMode.NONE, seed=0)
    assert log.count("LoWC") == 1
    assert log.count("NMAC") == 1
    assert log.count("MAC") == 0
    assert 90.0 < min(log.min_distances) < 110.0


def test_capacity_one_separates_merge_in_time(merge_config):
    for strategic in (StrategicMode.EXACT, StrategicMode.HEURISTIC):
        log = run_episode(merge_config.with_capacity(1), strategic, TacticalMode.NONE, seed=0)
        assert log.count("NMAC") == 0 and log.count("LoWC") == 0
        released = {f.flight_id: f.required for f in log.flights}
        assert released["B-1"] == pytest.approx(140.0)


def test_rule_follower_opens_the_gap(merge_config):
    unmitigated = run_episode(merge_config, StrategicMode.NONE, TacticalMode.NONE, seed=0)
    ruled = run_episode(merge_config, StrategicMode.NONE, TacticalMode.RULE, seed=0)
    assert min(ruled.min_distances) > min(unmitigated.min_distances)
    assert sum(f.alerts for f in ruled.flights) > 0
    assert set(ruled.reward_components) == {"total", "safety", "time", "action"}


@pytest.mark.parametrize("strategic,capacity", [(StrategicMode.NONE, None), (StrategicMode.EXACT, 1)])
def test_results_stable_when_step_is_halved(merge_config, strategic, capacity):
    config = merge_config if capacity is None else merge_config.with_capacity(capacity)
    coarse = run_episode(config, strategic, TacticalMode.NONE, seed=0)
    fine = run_episode(config.with_overrides({"engine": {"step_dt": 0.5}}), strategic, TacticalMode.NONE, seed=0)
    for kind in ("LoWC", "NMAC", "MAC"):
        assert fine.count(kind) == coarse.count(kind)
    if coarse.count("LoWC"):
        assert min(fine.min_distances) == pytest.approx(min(coarse.min_distances), abs=10.0)
    assert [f.flight_id for f in fine.flights] == [f.flight_id for f in coarse.flights]
    for a, b in zip(coarse.flights, fine.flights):
        assert b.required == pytest.approx(a.required)
        assert b.actual_time == pytest.approx(a.actual_time, abs=2.0)


def test_conservation_of_flights(default_config):
    log = run_episode(default_config, StrategicMode.NONE, TacticalMode.RULE, seed=3)
    assert len(log.flights) == 30
    assert log.released() == log.by_status("landed") + log.by_status("removed") + log.by_status("airborne")
    assert log.released() == 30
    assert all(f.required >= f.scheduled for f in log.flights)


def test_truncation_is_reported(merge_config):
    short = merge_config.with_overrides({"engine": {"max_sim_time": 30.0}})
    log = run_episode(short, StrategicMode.NONE, TacticalMode.NONE, seed=0)
    assert log.truncated
    assert log.end_time == pytest.approx(30.0)
    assert log.by_status("airborne") == 2


def test_policy_mode_needs_policy(merge_config):
    with pytest.raises(ExperimentConfigError):
        run_episode(merge_config, StrategicMode.NONE, TacticalMode.POLICY, seed=0)


def test_infeasible_plan_raises(worked_config):
    tight = worked_config.with_overrides({"dcb": {"horizon": 200.0}})
    with pytest.raises(DCBInfeasibleError) as err:
        SimulationEngine(tight).run_episode(StrategicMode.EXACT, TacticalMode.NONE, seed=0)
    assert err.value.binding_resource == "P"


def test_episode_is_deterministic(default_config):
    a = run_episode(default_config, StrategicMode.HEURISTIC, TacticalMode.RULE, seed=5)
    b = run_episode(default_config, StrategicMode.HEURISTIC, TacticalMode.RULE, seed=5)
    assert a == b


def test_speed_trace_recorded_on_request(merge_config):
    log = SimulationEngine(merge_config).run_episode(StrategicMode.NONE, TacticalMode.RULE, seed=0, record_speeds=True)
    assert log.speed_trace
    assert all(20.0 <= v <= 70.0 for _t, _f, v in log.speed_trace)


# ---------- monte carlo ----------

def test_single_run_matches_episode(merge_config):
    logs = monte_carlo(merge_config, StrategicMode.NONE, TacticalMode.RULE, runs=1, base_seed=9)
    assert logs == [run_episode(merge_config, StrategicMode.NONE, TacticalMode.RULE, seed=9)]


def test_runs_must_be_positive(merge_config):
    with pytest.raises(ExperimentConfigError):
        monte_carlo(merge_config, StrategicMode.NONE, TacticalMode.NONE, runs=0, base_seed=0)


def test_seeds_follow_base_seed(default_config):
    logs = monte_carlo(default_config, StrategicMode.NONE, TacticalMode.NONE, runs=3, base_seed=10)
    assert [log.seed for log in logs] == [10, 11, 12]


@pytest.mark.slow
def test_worker_count_does_not_change_results(default_config):
    serial = monte_carlo(default_config, StrategicMode.NONE, TacticalMode.RULE, runs=4, base_seed=0, workers=1)
    parallel = monte_carlo(default_config, StrategicMode.NONE, TacticalMode.RULE, runs=4, base_seed=0, workers=2)
    assert serial == parallel


@pytest.mark.slow
def test_high_demand_without_intervention_loses_separation(default_config):
    logs = monte_carlo(default_config, StrategicMode.NONE, TacticalMode.NONE, runs=10, base_seed=0)
    assert sum(log.count("LoWC") for log in logs) > 0


@pytest.mark.slow
def test_capacity_one_plan_has_no_nmac(default_config):
    logs = monte_carlo(default_config.with_capacity(1), StrategicMode.EXACT, TacticalMode.NONE, runs=5, base_seed=0)
    assert sum(log.count("NMAC") for log in logs) == 0


@pytest.mark.slow
def test_disjoint_seed_ranges_give_overlapping_intervals(default_config):
    params = RiskModelParams()
    first = aggregate(monte_carlo(default_config, StrategicMode.NONE, TacticalMode.NONE, runs=20, base_seed=0), params)
    second = aggregate(monte_carlo(default_config, StrategicMode.NONE, TacticalMode.NONE, runs=20, base_seed=1000), params)
    for name in ("lowc_per_fh", "nmac_per_fh", "est_mac_per_100k_fh"):
        low_a, high_a = first.confidence_intervals[name]
        low_b, high_b = second.confidence_intervals[name]
        assert low_a <= high_b and low_b <= high_a, name
