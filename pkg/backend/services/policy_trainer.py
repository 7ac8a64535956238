#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Shared-policy training: batched rollouts in the engine, single-writer value updates"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.scenario_loader import ScenarioConfig
from errors import TrainingDivergenceError
from models.simulation import ScheduleTable, StrategicMode, TacticalMode
from models.tactical import CurvePoint, DetectionMode
from services.airspace_service import AirspaceService
from services.dcb_solver import solve_exact
from services.policy_learner import ExplorationController, PolicyTable, epsilon_at
from services.simulation_engine import SimulationEngine

logger = logging.getLogger(__name__)

Rollout = Tuple[int, CurvePoint, list]


def build_pool(config: ScenarioConfig, size: int, seed: int, strategic: StrategicMode = StrategicMode.NONE) -> List[ScheduleTable]:
    """
    Schedule tables for training; balanced in advance when strategic is exact

    An explicit flight table in the scenario yields a pool of that single table.
    """
    airspace = AirspaceService(config)
    if config.flights is not None:
        size = 1
    dcb_cfg = config.dcb_config()
    pool = []
    for i in range(size):
        plans = tuple(airspace.flight_plans(seed + i))
        solution = solve_exact(plans, airspace.network, dcb_cfg) if strategic is StrategicMode.EXACT else None
        pool.append(ScheduleTable(plans=plans, solution=solution))
    return pool


def _rollout(args: Tuple[ScenarioConfig, PolicyTable, ScheduleTable, StrategicMode, int, float, int]) -> Rollout:
    config, snapshot, table, strategic, episode, epsilon, seed = args
    rng = np.random.default_rng([seed, episode, 1])
    controller = ExplorationController(snapshot, epsilon, rng)
    log = SimulationEngine(config).run_episode(
        strategic,
        TacticalMode.POLICY,
        seed,
        plans=list(table.plans),
        solution=table.solution,
        controller=controller,
    )
    parts = log.reward_components
    point = CurvePoint(
        episode=episode,
        total=parts.get("total", 0.0),
        safety=parts.get("safety", 0.0),
        time=parts.get("time", 0.0),
        action=parts.get("action", 0.0),
        nmac=log.count("NMAC"),
        epsilon=epsilon,
    )
    return episode, point, controller.transitions


def train_policy(
    config: ScenarioConfig,
    pool: Sequence[ScheduleTable],
    mode: DetectionMode,
    seed: int,
    episodes: Optional[int] = None,
    strategic: StrategicMode = StrategicMode.NONE,
    workers: int = 1,
) -> Tuple[PolicyTable, List[CurvePoint]]:
    """
    Learn one action-value table shared by every aircraft

    Episodes are rolled out in batches of update_period against a frozen snapshot;
    the collected transitions are then applied in episode order by this process only,
    so the result does not depend on the worker count.

    Args:
        config: scenario (learner section supplies the hyperparameters)
        pool: schedule tables; one is drawn per episode
        mode: intruder detection mode
        seed: master seed (table draws and exploration)
        episodes: overrides learner.episodes
        strategic: release mode used in rollouts
        workers: rollout processes

    Returns:
        (trained PolicyTable, per-episode learning curve)

    Raises:
        TrainingDivergenceError: an action value became non-finite
    """
    if not pool:
        raise ValueError("training pool must not be empty")
    lr = config.learner
    total = lr.episodes if episodes is None else episodes
    policy = PolicyTable.create(config, mode)
    picker = np.random.default_rng([seed, 0])
    draws = picker.integers(len(pool), size=total) if total > 0 else []

    curve: List[CurvePoint] = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for start in range(0, total, lr.update_period):
            batch = range(start, min(start + lr.update_period, total))
            snapshot = policy.copy()
            jobs = [
                (config, snapshot, pool[int(draws[e])], strategic, e,
                 epsilon_at(e, lr.epsilon_start, lr.epsilon_end, lr.epsilon_decay_episodes), seed)
                for e in batch
            ]
            results = list(executor.map(_rollout, jobs)) if executor else [_rollout(job) for job in jobs]
            results.sort(key=lambda r: r[0])

            for episode, point, transitions in results:
                for key, action_index, reward_value, next_key in transitions:
                    policy.update(key, action_index, reward_value, next_key, lr.learning_rate, lr.discount)
                curve.append(point)

            if not np.all(np.isfinite(policy.values)):
                last = batch[-1]
                bad = int(np.count_nonzero(~np.isfinite(policy.values)))
                logger.error(f"❌ training diverged after episode {last}: {bad} non-finite values")
                raise TrainingDivergenceError(last, {
                    "non_finite_entries": bad,
                    "learning_rate": lr.learning_rate,
                    "discount": lr.discount,
                    "last_episode_total": curve[-1].total if curve else None,
                })
            logger.debug(f"ℹ️ training: episodes {batch[0]}-{batch[-1]} applied, last total {curve[-1].total:.3f}")
    finally:
        if executor is not None:
            executor.shutdown()

    visited = int(np.count_nonzero(policy.visits.sum(axis=-1)))
    logger.info(f"✅ training done: {total} episodes, {visited} states visited ({mode.value} detection)")
    return policy, curve
