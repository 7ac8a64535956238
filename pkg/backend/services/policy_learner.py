#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Shared tabular action-value policy and the tactical controllers driven by the engine"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.scenario_loader import ScenarioConfig
from models.tactical import (
    LEARNED_ACTIONS,
    CurvePoint,
    DetectionMode,
    ObservationVector,
    RulePolicyParams,
    SafetyThresholds,
    SpeedAction,
)
from services.tactical_policy import rule_based_policy

logger = logging.getLogger(__name__)

FEATURES = ("d_goal", "speed", "leader_distance", "relative_speed")
# greedy tie-break: hold, then decrease, then increase
TIE_BREAK_ORDER = (1, 0, 2)

StateKey = Tuple[int, int, int, int]


def _bin(value: float, edges: np.ndarray) -> int:
    """Index into len(edges) - 1 bins; values outside the range clip to the end bins"""
    interior = edges[1:-1]
    return int(np.searchsorted(interior, value, side="right"))


@dataclass
class PolicyTable:
    """Discretised observation -> action values, shared by every aircraft"""
    edges: Dict[str, np.ndarray]  # d_goal, speed, relative_speed; leader_distance gets one extra "none" bin
    values: np.ndarray  # shape (*bins, 3)
    visits: np.ndarray  # same shape, int
    detection_mode: DetectionMode = DetectionMode.FORWARD
    hyperparameters: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def create(cls, config: ScenarioConfig, detection_mode: Optional[DetectionMode] = None) -> "PolicyTable":
        """Zero-initialised table sized from the scenario's geometry and learner section"""
        network = config.network()
        perf = network.performance
        bins = config.learner.bins
        max_route = max((r.length for r in network.routes.values()), default=1.0)
        rel = perf.v_max - perf.v_min
        edges = {
            "d_goal": np.linspace(0.0, max_route, bins.d_goal + 1),
            "speed": np.linspace(perf.v_min, perf.v_max, bins.speed + 1),
            "leader_distance": np.linspace(0.0, config.thresholds.observation_range, bins.leader_distance),
            "relative_speed": np.linspace(-rel, rel, bins.relative_speed + 1),
        }
        shape = (bins.d_goal, bins.speed, bins.leader_distance, bins.relative_speed, len(LEARNED_ACTIONS))
        lr = config.learner
        mode = detection_mode or DetectionMode(lr.detection_mode)
        return cls(
            edges=edges,
            values=np.zeros(shape, dtype=float),
            visits=np.zeros(shape, dtype=np.int64),
            detection_mode=mode,
            hyperparameters={
                "learning_rate": lr.learning_rate,
                "discount": lr.discount,
                "epsilon_start": lr.epsilon_start,
                "epsilon_end": lr.epsilon_end,
                "epsilon_decay_episodes": lr.epsilon_decay_episodes,
                "update_period": lr.update_period,
            },
        )

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    def state_key(self, obs: ObservationVector) -> StateKey:
        """Own distance-to-goal, own speed, nearest intruder distance and relative speed bins"""
        own = obs.ownship
        d_goal = _bin(own.d_goal, self.edges["d_goal"])
        speed = _bin(own.v, self.edges["speed"])
        n_leader = self.shape[2]
        n_rel = self.shape[3]
        leader = obs.nearest
        if leader is None:
            return (d_goal, speed, n_leader - 1, n_rel // 2)
        distance = _bin(leader.d_oi, self.edges["leader_distance"])
        relative = _bin(leader.v - own.v, self.edges["relative_speed"])
        return (d_goal, speed, min(distance, n_leader - 2), relative)

    def seen(self, key: StateKey) -> bool:
        return bool(self.visits[key].sum() > 0)

    def greedy_index(self, key: StateKey) -> int:
        row = self.values[key]
        best = row.max()
        for i in TIE_BREAK_ORDER:
            if row[i] == best:
                return i
        return 1

    def copy(self) -> "PolicyTable":
        return PolicyTable(
            edges={k: v.copy() for k, v in self.edges.items()},
            values=self.values.copy(),
            visits=self.visits.copy(),
            detection_mode=self.detection_mode,
            hyperparameters=dict(self.hyperparameters),
        )

    def update(self, key: StateKey, action_index: int, reward_value: float,
               next_key: Optional[StateKey], learning_rate: float, discount: float) -> None:
        """One temporal-difference step; next_key None marks a terminal transition"""
        target = reward_value
        if next_key is not None:
            target += discount * float(self.values[next_key].max())
        index = key + (action_index,)
        self.values[index] += learning_rate * (target - self.values[index])
        self.visits[index] += 1


def epsilon_at(episode: int, start: float, end: float, decay_episodes: int) -> float:
    """Linear decay from start to end over decay_episodes, constant afterwards"""
    if decay_episodes <= 0 or episode >= decay_episodes:
        return end
    return start + (end - start) * (episode / decay_episodes)


def policy_act(
    policy: PolicyTable,
    obs: ObservationVector,
    explore: bool = False,
    epsilon: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> SpeedAction:
    """
    Greedy (or epsilon-greedy) readout of the table

    Args:
        policy: trained or fresh table
        obs: observation of the acting aircraft
        explore: draw a uniform random action with probability epsilon
        epsilon: exploration probability used when explore is set
        rng: generator for exploration draws

    Returns:
        SpeedAction (hold for a state never visited)
    """
    if explore:
        if rng is None:
            raise ValueError("exploration needs a random generator")
        if rng.random() < epsilon:
            return LEARNED_ACTIONS[int(rng.integers(len(LEARNED_ACTIONS)))]
    key = policy.state_key(obs)
    if not policy.seen(key):
        logger.debug(f"ℹ️ unseen state {key}, holding speed")
        return SpeedAction.HOLD
    return LEARNED_ACTIONS[policy.greedy_index(key)]


def episodes_to_threshold(curve: Sequence[CurvePoint], threshold: float, window: int = 10) -> int:
    """
    First episode (1-based) whose trailing window mean of total reward reaches the threshold

    Returns len(curve) + 1 when the threshold is never reached.
    """
    totals = [p.total for p in curve]
    if window < 1:
        raise ValueError(f"window must be >= 1 (got {window})")
    for end in range(window, len(totals) + 1):
        if math.fsum(totals[end - window:end]) / window >= threshold:
            return end
    return len(totals) + 1


# ---------- controllers ----------

class TacticalController:
    """Advisory source queried by the engine every decision interval"""

    detection_mode = DetectionMode.FORWARD

    def decide(self, flight_id: str, obs: ObservationVector) -> SpeedAction:
        return SpeedAction.HOLD

    def record(self, flight_id: str, obs: ObservationVector, action: SpeedAction,
               reward_value: float, next_obs: Optional[ObservationVector]) -> None:
        """Called once per completed decision interval; next_obs None at landing/removal"""


class RuleController(TacticalController):
    def __init__(self, params: RulePolicyParams, thresholds: SafetyThresholds):
        self.params = params
        self.thresholds = thresholds

    def decide(self, flight_id: str, obs: ObservationVector) -> SpeedAction:
        return rule_based_policy(obs, self.params, self.thresholds)


class PolicyController(TacticalController):
    """Frozen greedy readout of a trained table"""

    def __init__(self, policy: PolicyTable):
        self.policy = policy
        self.detection_mode = policy.detection_mode

    def decide(self, flight_id: str, obs: ObservationVector) -> SpeedAction:
        return policy_act(self.policy, obs, explore=False)


class ExplorationController(TacticalController):
    """Epsilon-greedy rollout against a frozen snapshot, collecting transitions for a later update"""

    def __init__(self, policy: PolicyTable, epsilon: float, rng: np.random.Generator):
        self.policy = policy
        self.detection_mode = policy.detection_mode
        self.epsilon = epsilon
        self.rng = rng
        self.transitions: List[Tuple[StateKey, int, float, Optional[StateKey]]] = []

    def decide(self, flight_id: str, obs: ObservationVector) -> SpeedAction:
        return policy_act(self.policy, obs, explore=True, epsilon=self.epsilon, rng=self.rng)

    def record(self, flight_id: str, obs: ObservationVector, action: SpeedAction,
               reward_value: float, next_obs: Optional[ObservationVector]) -> None:
        key = self.policy.state_key(obs)
        next_key = None if next_obs is None else self.policy.state_key(next_obs)
        self.transitions.append((key, LEARNED_ACTIONS.index(action), reward_value, next_key))
