#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Tactical deconfliction: observation, reward and the rule-based follower policy"""

import logging
import math
from typing import TYPE_CHECKING, Dict, Optional

from models.airspace import AircraftPerformance
from models.simulation import AircraftState
from models.tactical import (
    DetectionMode,
    IntruderState,
    ObservationVector,
    OwnshipState,
    RewardBreakdown,
    RewardParams,
    RulePolicyParams,
    SafetyThresholds,
    SpeedAction,
    Transition,
)

if TYPE_CHECKING:
    from services.simulation_engine import World

logger = logging.getLogger(__name__)


def shared_node_gaps(
    follower: AircraftState,
    leader: AircraftState,
    node_arcs: Dict[str, Dict[str, float]],
) -> Optional[tuple]:
    """
    Distances of both aircraft to the first node ahead of both on their routes

    Args:
        follower: candidate follower (its route order decides "first")
        leader: candidate leader
        node_arcs: route id -> {node id: arc position}

    Returns:
        (follower gap, leader gap), or None when the routes share nothing ahead
    """
    own_arcs = node_arcs[follower.route_id]
    other_arcs = node_arcs[leader.route_id]
    for node, own_arc in own_arcs.items():
        if own_arc < follower.arc_position:
            continue
        other_arc = other_arcs.get(node)
        if other_arc is None or other_arc < leader.arc_position:
            continue
        return (own_arc - follower.arc_position, other_arc - leader.arc_position)
    return None


def is_leading(candidate: AircraftState, ownship: AircraftState, node_arcs: Dict[str, Dict[str, float]]) -> bool:
    """Strictly closer to the first shared downstream node; ties lead nobody"""
    gaps = shared_node_gaps(ownship, candidate, node_arcs)
    if gaps is None:
        return False
    own_gap, other_gap = gaps
    return other_gap < own_gap


def observe(
    ownship_id: str,
    world: "World",
    mode: DetectionMode,
    thresholds: SafetyThresholds,
) -> ObservationVector:
    """
    Build the MDP state of one airborne aircraft

    Args:
        ownship_id: observing aircraft
        world: engine state
        mode: ALL (every aircraft in range) or FORWARD (leading aircraft only)
        thresholds: observation range and d_nmac

    Returns:
        ObservationVector with intruders sorted by (distance, flight id)
    """
    own = world.aircraft[ownship_id]
    own_pos = world.position(own)
    ownship = OwnshipState(
        d_goal=max(0.0, world.route_length[own.route_id] - own.arc_position),
        v=own.speed,
        heading=world.heading(own),
        d_nmac=thresholds.d_nmac,
    )

    intruders = []
    for other in world.airborne():
        if other.flight_id == ownship_id:
            continue
        other_pos = world.position(other)
        d_oi = math.hypot(other_pos[0] - own_pos[0], other_pos[1] - own_pos[1])
        if d_oi > thresholds.observation_range:
            continue
        if mode is DetectionMode.FORWARD and not is_leading(other, own, world.node_arcs):
            continue
        intruders.append(IntruderState(
            flight_id=other.flight_id,
            d_goal=max(0.0, world.route_length[other.route_id] - other.arc_position),
            v=other.speed,
            heading=world.heading(other),
            d_oi=d_oi,
        ))
    intruders.sort(key=lambda i: (i.d_oi, i.flight_id))
    return ObservationVector(ownship=ownship, intruders=tuple(intruders))


def safety_term(distance: float, alpha: float, delta: float, thresholds: SafetyThresholds) -> float:
    if distance < thresholds.d_nmac:
        return -1.0
    if distance <= thresholds.d_lowc:
        return -alpha + delta * distance
    return 0.0


def reward(transition: Transition, params: RewardParams, thresholds: SafetyThresholds) -> RewardBreakdown:
    """
    Safety + time + action reward of one decision interval

    Raises:
        ValueError: negative (or NaN) minimum distance
    """
    d = transition.min_distance
    if math.isnan(d) or d < 0:
        raise ValueError(f"minimum distance must be >= 0 (got {d})")
    alpha, delta = params.resolved(thresholds)

    safety = safety_term(d, alpha, delta, thresholds)
    time_term = -1.0 if transition.elapsed > transition.time_limit else -params.eta
    action_term = 0.0 if transition.action is SpeedAction.HOLD else -params.psi
    return RewardBreakdown(
        total=safety + time_term + action_term,
        safety=safety,
        time=time_term,
        action=action_term,
    )


def rule_based_policy(obs: ObservationVector, params: RulePolicyParams, thresholds: SafetyThresholds) -> SpeedAction:
    """
    Follower speed rule on the nearest leading aircraft

    Closed hold band: [d_ls, d_hs] holds. Open band: both boundaries change speed.
    """
    leader = obs.nearest
    if leader is None:
        return SpeedAction.INCREASE
    d = leader.d_oi
    if d < thresholds.d_nmac:
        return SpeedAction.HOVER
    if params.closed_hold_band:
        if d < params.d_ls:
            return SpeedAction.DECREASE
        if d <= params.d_hs:
            return SpeedAction.HOLD
        return SpeedAction.INCREASE
    if d <= params.d_ls:
        return SpeedAction.DECREASE
    if d >= params.d_hs:
        return SpeedAction.INCREASE
    return SpeedAction.HOLD


def next_target_speed(current_target: float, action: SpeedAction, perf: AircraftPerformance) -> float:
    """Apply one advisory to the target speed, clamped to the envelope"""
    if action is SpeedAction.HOVER:
        return perf.v_min
    return perf.clamp(current_target + action.sign * perf.dv)
