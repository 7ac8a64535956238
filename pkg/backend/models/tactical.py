#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Tactical deconfliction data models"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np


class SpeedAction(Enum):
    """Speed advisory; HOVER is the rule-based minimum-speed directive"""
    DECREASE = "decrease"
    HOLD = "hold"
    INCREASE = "increase"
    HOVER = "hover"

    @property
    def sign(self) -> int:
        return {"decrease": -1, "hold": 0, "increase": 1, "hover": 0}[self.value]


# Learned-policy action order; index i of every value row
LEARNED_ACTIONS: Tuple[SpeedAction, ...] = (SpeedAction.DECREASE, SpeedAction.HOLD, SpeedAction.INCREASE)


class DetectionMode(Enum):
    """Intruder detection policy"""
    ALL = "all"
    FORWARD = "forward"


@dataclass(frozen=True)
class SafetyThresholds:
    """Horizontal separation thresholds (meters)"""
    d_mac: float = 10.0
    d_nmac: float = 150.0
    d_lowc: float = 500.0
    observation_range: float = 1500.0


@dataclass(frozen=True)
class OwnshipState:
    d_goal: float
    v: float
    heading: float
    d_nmac: float


@dataclass(frozen=True)
class IntruderState:
    flight_id: str
    d_goal: float
    v: float
    heading: float
    d_oi: float  # ownship-intruder distance


@dataclass(frozen=True)
class ObservationVector:
    """MDP state for one agent at one decision instant"""
    ownship: OwnshipState
    intruders: Tuple[IntruderState, ...] = ()

    @property
    def nearest(self) -> Optional[IntruderState]:
        return self.intruders[0] if self.intruders else None


@dataclass(frozen=True)
class RewardParams:
    """Reward shaping constants; alpha/delta default to the continuous choice"""
    alpha: Optional[float] = None
    delta: Optional[float] = None
    eta: float = 0.001  # per decision step
    psi: float = 0.01  # per speed change
    max_flight_time: Optional[float] = None  # seconds; None -> factor x unobstructed time
    max_flight_time_factor: float = 3.0

    def resolved(self, thresholds: SafetyThresholds) -> Tuple[float, float]:
        """(alpha, delta) making the safety term continuous at d_nmac and d_lowc"""
        span = thresholds.d_lowc - thresholds.d_nmac
        alpha = self.alpha if self.alpha is not None else thresholds.d_lowc / span
        delta = self.delta if self.delta is not None else 1.0 / span
        return alpha, delta

    def time_limit(self, unobstructed_time: float) -> float:
        if self.max_flight_time is not None:
            return self.max_flight_time
        return self.max_flight_time_factor * unobstructed_time


@dataclass(frozen=True)
class Transition:
    """What the reward needs to know about one decision interval"""
    min_distance: float
    action: SpeedAction
    elapsed: float
    time_limit: float


@dataclass(frozen=True)
class RewardBreakdown:
    total: float
    safety: float
    time: float
    action: float


@dataclass(frozen=True)
class RulePolicyParams:
    """Separation bands for the rule-based follower"""
    d_ls: float = 400.0
    d_hs: float = 800.0
    closed_hold_band: bool = True  # False reproduces the boundary oscillation


@dataclass(frozen=True)
class CostMatrix:
    """3x3 bimatrix; rows aircraft-1 action, columns aircraft-2 action (payoffs, higher is better)"""
    player1: np.ndarray
    player2: np.ndarray
    actions: Tuple[str, ...] = ("speed_up", "hold", "slow_down")

    @classmethod
    def from_pairs(cls, cells: Sequence[Sequence[Sequence[float]]],
                   actions: Sequence[str] = ("speed_up", "hold", "slow_down")) -> "CostMatrix":
        arr = np.asarray(cells, dtype=float)
        return cls(player1=arr[:, :, 0], player2=arr[:, :, 1], actions=tuple(actions))


@dataclass
class EquilibriumReport:
    strict_nash: List[Tuple[str, str]] = field(default_factory=list)
    weak_nash: List[Tuple[str, str]] = field(default_factory=list)
    stackelberg: Optional[Tuple[str, str]] = None
    leader_value: Optional[float] = None


@dataclass(frozen=True)
class CurvePoint:
    """Per-episode reward totals, summed over every agent's decisions"""
    episode: int
    total: float
    safety: float
    time: float
    action: float
    nmac: int = 0
    epsilon: float = 0.0
