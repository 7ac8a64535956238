#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Shared fixtures: bundled scenarios and small hand-built instances"""

from typing import Sequence, Tuple

import pytest

from config.scenario_loader import ScenarioConfig, ScenarioLoader
from models.airspace import FlightPlan
from models.simulation import Event, EpisodeLog, FlightRecord


@pytest.fixture(scope="session")
def loader() -> ScenarioLoader:
    return ScenarioLoader()


@pytest.fixture
def default_config(loader) -> ScenarioConfig:
    return loader.get_scenario("default")


@pytest.fixture
def merge_config(loader) -> ScenarioConfig:
    """Two routes meeting at M-1; B-1 departs 2 s after A-1 and reaches the merge 100 m behind"""
    return loader.get_scenario("merge_two_routes")


@pytest.fixture
def worked_config(loader) -> ScenarioConfig:
    """One route, one C=1 resource 100 s downstream, flights at 0/10/20 s"""
    return loader.get_scenario("dcb_worked_example")


def make_plan(flight_id: str, scheduled: float, offsets: Sequence[Tuple[str, float]],
              origin: str = "O", route_id: str = "R") -> FlightPlan:
    return FlightPlan(
        flight_id=flight_id,
        route_id=route_id,
        origin=origin,
        scheduled_departure=scheduled,
        required_departure=scheduled,
        resource_offsets=tuple(offsets),
    )


def make_log(seed: int = 0, nmac: int = 0, mac: int = 0, lowc: int = 0,
             flight_seconds: Sequence[float] = (), ground_delay: float = 0.0, alerts: int = 0) -> EpisodeLog:
    """Episode log with the given event counts and one landed flight per duration"""
    events = []
    for kind, count in (("LoWC", lowc), ("NMAC", nmac), ("MAC", mac)):
        events += [Event(kind, "A", "B", float(i), float(i) + 1.0, 1.0) for i in range(count)]
    flights = [
        FlightRecord(
            flight_id=f"F-{i}",
            route_id="R",
            scheduled=0.0,
            required=ground_delay,
            estimated_time=seconds,
            actual_time=seconds,
            alerts=alerts,
            status="landed",
        )
        for i, seconds in enumerate(flight_seconds)
    ]
    return EpisodeLog(seed=seed, strategic_mode="none", tactical_mode="none", events=events, flights=flights)
