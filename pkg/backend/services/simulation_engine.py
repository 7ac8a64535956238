#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Deterministic fast-time simulation

One episode runs on a single thread: release -> decide (every decision_dt) ->
ramp/move -> land or remove -> detect separation events. Monte Carlo episodes
run on independent worker processes.
"""

import bisect
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from config.scenario_loader import ScenarioConfig
from errors import DCBInfeasibleError, ExperimentConfigError
from models.airspace import AirspaceNetwork, FlightPlan
from models.dcb import DCBConfig, DCBSolution
from models.simulation import (
    AircraftState,
    EngineConfig,
    EpisodeLog,
    Event,
    FlightRecord,
    Phase,
    StrategicMode,
    TacticalMode,
)
from models.tactical import ObservationVector, SafetyThresholds, SpeedAction, Transition
from services.airspace_service import AirspaceService
from services.dcb_heuristic import HeuristicDCB, to_request
from services.dcb_solver import solve_exact
from services.policy_learner import PolicyController, PolicyTable, RuleController, TacticalController
from services.tactical_policy import next_target_speed, observe, reward

logger = logging.getLogger(__name__)

EVENT_KINDS = ("LoWC", "NMAC", "MAC")


# ---------- release schedulers ----------

class PlannedRelease:
    """Releases each flight at a precomputed required departure"""

    def __init__(self, required: Dict[str, float]):
        self.required = required

    def due(self, pending: Sequence[AircraftState], t: float, dt: float) -> List[Tuple[str, float]]:
        return [
            (s.flight_id, self.required[s.flight_id])
            for s in pending
            if self.required[s.flight_id] < t + dt - 1e-9
        ]


class OnlineHeuristicRelease:
    """Queries the heuristic once per step at the current clock"""

    def __init__(self, heuristic: HeuristicDCB, plans: Dict[str, FlightPlan], network: AirspaceNetwork):
        self.heuristic = heuristic
        self.requests = {fid: to_request(p, network) for fid, p in plans.items()}

    def due(self, pending: Sequence[AircraftState], t: float, dt: float) -> List[Tuple[str, float]]:
        released = self.heuristic.solve_heuristic([self.requests[s.flight_id] for s in pending], t)
        return [(r.flight_id, t) for r in released]


def separated_departures(plans: Sequence[FlightPlan], separation: float) -> Dict[str, float]:
    """Earliest departures honouring only the per-origin separation (FIFO by scheduled time)"""
    last: Dict[str, float] = {}
    required = {}
    for plan in sorted(plans, key=lambda p: (p.scheduled_departure, p.flight_id)):
        r = plan.scheduled_departure
        if plan.origin in last:
            r = max(r, last[plan.origin] + separation)
        last[plan.origin] = r
        required[plan.flight_id] = r
    return required


# ---------- world ----------

class World:
    """Aircraft states plus cached route geometry"""

    def __init__(self, network: AirspaceNetwork, plans: Sequence[FlightPlan], release, time_limits: Dict[str, float]):
        self.network = network
        self.t = 0.0
        self.release = release
        self.time_limits = time_limits
        ordered = sorted(plans, key=lambda p: (p.scheduled_departure, p.flight_id))
        self.plans = {p.flight_id: p for p in ordered}
        self.aircraft: Dict[str, AircraftState] = {
            p.flight_id: AircraftState(flight_id=p.flight_id, route_id=p.route_id, scheduled_departure=p.scheduled_departure)
            for p in ordered
        }
        self.node_arcs: Dict[str, Dict[str, float]] = {}
        self.route_length: Dict[str, float] = {}
        self._geometry: Dict[str, Tuple[List[float], List[Tuple[float, float]], List[float]]] = {}
        for route_id, route in network.routes.items():
            arcs = network.node_arcs(route_id)
            points = [network.nodes[n].position for n in route.nodes]
            headings = [
                math.atan2(b[1] - a[1], b[0] - a[0]) for a, b in zip(points[:-1], points[1:])
            ]
            self.node_arcs[route_id] = dict(zip(route.nodes, arcs))
            self.route_length[route_id] = arcs[-1]
            self._geometry[route_id] = (arcs, points, headings)
        self.newly_finished: List[str] = []

    def _leg(self, route_id: str, arc: float) -> int:
        arcs = self._geometry[route_id][0]
        return min(max(bisect.bisect_right(arcs, arc) - 1, 0), len(arcs) - 2)

    def position(self, state: AircraftState) -> Tuple[float, float]:
        arcs, points, _ = self._geometry[state.route_id]
        arc = min(max(state.arc_position, 0.0), arcs[-1])
        i = self._leg(state.route_id, arc)
        frac = (arc - arcs[i]) / (arcs[i + 1] - arcs[i])
        (ax, ay), (bx, by) = points[i], points[i + 1]
        return (ax + frac * (bx - ax), ay + frac * (by - ay))

    def heading(self, state: AircraftState) -> float:
        return self._geometry[state.route_id][2][self._leg(state.route_id, state.arc_position)]

    def airborne(self) -> List[AircraftState]:
        return [s for s in self.aircraft.values() if s.phase is Phase.AIRBORNE]

    def pending(self) -> List[AircraftState]:
        return [s for s in self.aircraft.values() if s.phase is Phase.PRE_DEPARTURE]

    def finished(self) -> bool:
        return all(s.phase in (Phase.LANDED, Phase.REMOVED) for s in self.aircraft.values())


def step(world: World, dt: float) -> World:
    """
    Advance the world by dt

    Released aircraft start at v_cruise and only fly the part of the step after
    their release time. Speed ramps toward target at most accel * dt before moving.
    """
    perf = world.network.performance
    t = world.t
    world.newly_finished = []
    fractions: Dict[str, float] = {}
    pending = world.pending()
    if pending:
        for flight_id, release_time in world.release.due(pending, t, dt):
            state = world.aircraft[flight_id]
            state.release_time = release_time
            state.phase = Phase.AIRBORNE
            state.speed = perf.v_cruise
            state.target_speed = perf.v_cruise
            fractions[flight_id] = min(dt, max(0.0, t + dt - release_time))

    for state in world.airborne():
        h = fractions.get(state.flight_id, dt)
        if h <= 0.0:
            continue
        ramp = perf.accel * h
        state.speed += min(max(state.target_speed - state.speed, -ramp), ramp)
        state.arc_position += state.speed * h
        state.airborne_elapsed += h
        length = world.route_length[state.route_id]
        if state.arc_position >= length:
            overshoot = state.arc_position - length
            state.arc_position = length
            state.actual_time = state.airborne_elapsed - overshoot / state.speed
            state.phase = Phase.LANDED
            world.newly_finished.append(state.flight_id)
        elif state.airborne_elapsed > world.time_limits[state.flight_id]:
            state.actual_time = state.airborne_elapsed
            state.phase = Phase.REMOVED
            world.newly_finished.append(state.flight_id)
            logger.debug(f"⚠️ {state.flight_id} removed after {state.airborne_elapsed:.0f}s airborne")
    world.t = t + dt
    return world


# ---------- events ----------

class EventTracker:
    """Opens an event when a pair drops below a threshold and closes it on the way back up"""

    def __init__(self, thresholds: SafetyThresholds):
        self.levels = (("LoWC", thresholds.d_lowc), ("NMAC", thresholds.d_nmac), ("MAC", thresholds.d_mac))
        self.open: Dict[Tuple[str, str, str], List[float]] = {}  # (kind, a, b) -> [t_start, min_distance]
        self.events: List[Event] = []

    def observe_pair(self, a: str, b: str, distance: float, t: float) -> None:
        a, b = (a, b) if a <= b else (b, a)
        for kind, threshold in self.levels:
            key = (kind, a, b)
            if distance < threshold:
                if key in self.open:
                    self.open[key][1] = min(self.open[key][1], distance)
                else:
                    self.open[key] = [t, distance]
            elif key in self.open:
                self._close(key, t)

    def close_missing(self, active_pairs: Iterable[Tuple[str, str]], t: float) -> None:
        """Close events of pairs that were not observed this step (landed or removed)"""
        active = set(active_pairs)
        for key in sorted(self.open):
            if (key[1], key[2]) not in active:
                self._close(key, t)

    def close_all(self, t: float) -> None:
        for key in sorted(self.open):
            self._close(key, t)

    def _close(self, key: Tuple[str, str, str], t: float) -> None:
        t_start, min_distance = self.open.pop(key)
        kind, a, b = key
        self.events.append(Event(kind=kind, flight_a=a, flight_b=b, t_start=t_start, t_end=t, min_distance=min_distance))

    def sorted_events(self) -> List[Event]:
        order = {k: i for i, k in enumerate(EVENT_KINDS)}
        return sorted(self.events, key=lambda e: (e.t_start, order[e.kind], e.flight_a, e.flight_b, e.t_end))


def detect_events(world: World, tracker: EventTracker, thresholds: SafetyThresholds) -> float:
    """
    Classify every airborne pair at the current clock

    Also lowers each aircraft's minimum distance since its last decision.

    Returns:
        minimum pairwise distance this step (inf with fewer than two airborne)
    """
    airborne = world.airborne()
    t = world.t
    if len(airborne) < 2:
        tracker.close_missing((), t)
        return math.inf
    positions = np.array([world.position(s) for s in airborne])
    distances = pdist(positions)
    pairs = []
    k = 0
    for i in range(len(airborne)):
        for j in range(i + 1, len(airborne)):
            a, b = airborne[i], airborne[j]
            d = float(distances[k])
            k += 1
            tracker.observe_pair(a.flight_id, b.flight_id, d, t)
            pairs.append(tuple(sorted((a.flight_id, b.flight_id))))
            a.min_distance_since_decision = min(a.min_distance_since_decision, d)
            b.min_distance_since_decision = min(b.min_distance_since_decision, d)
    tracker.close_missing(pairs, t)
    return float(distances.min())


# ---------- episodes ----------

class SimulationEngine:
    """Scenario-bound episode runner"""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.airspace = AirspaceService(config)
        self.network = self.airspace.network
        self.engine_cfg: EngineConfig = config.engine_config()
        self.thresholds = config.safety_thresholds()
        self.reward_params = config.reward_params()
        self.dcb_cfg: DCBConfig = config.dcb_config()

    def controller_for(self, tactical: TacticalMode, policy: Optional[PolicyTable] = None) -> Optional[TacticalController]:
        if tactical is TacticalMode.NONE:
            return None
        if tactical is TacticalMode.RULE:
            return RuleController(self.config.rule_params(), self.thresholds)
        if policy is None:
            raise ExperimentConfigError("tactical mode 'policy' needs a trained policy (--policy-file)")
        return PolicyController(policy)

    def _release(self, strategic: StrategicMode, plans: Sequence[FlightPlan], solution: Optional[DCBSolution]):
        if strategic is StrategicMode.NONE:
            return PlannedRelease(separated_departures(plans, self.dcb_cfg.departure_separation))
        if strategic is StrategicMode.EXACT:
            if solution is None:
                solution = solve_exact(plans, self.network, self.dcb_cfg)
            if solution.status == "infeasible":
                raise DCBInfeasibleError(solution.binding_resource)
            return PlannedRelease(dict(solution.required_departures))
        return OnlineHeuristicRelease(HeuristicDCB(self.dcb_cfg), {p.flight_id: p for p in plans}, self.network)

    def run_episode(
        self,
        strategic: StrategicMode,
        tactical: TacticalMode,
        seed: int,
        plans: Optional[Sequence[FlightPlan]] = None,
        solution: Optional[DCBSolution] = None,
        policy: Optional[PolicyTable] = None,
        controller: Optional[TacticalController] = None,
        record_speeds: bool = False,
    ) -> EpisodeLog:
        """
        Fly one schedule table from first departure to last landing

        Args:
            strategic: release mode
            tactical: advisory mode (ignored when a controller is passed)
            seed: demand seed (used when plans are not given)
            plans: schedule table; generated from the scenario when None
            solution: precomputed balanced schedule for strategic exact
            policy: trained table for tactical policy
            controller: explicit advisory source (training rollouts)
            record_speeds: keep a per-step speed trace

        Returns:
            EpisodeLog (truncated when max_sim_time is reached with traffic left)
        """
        if plans is None:
            plans = self.airspace.flight_plans(seed)
        if controller is None:
            controller = self.controller_for(tactical, policy)
        perf = self.network.performance
        unobstructed = {p.flight_id: self.airspace.unobstructed_time(p.route_id) for p in plans}
        time_limits = {fid: self.reward_params.time_limit(t) for fid, t in unobstructed.items()}
        world = World(self.network, plans, self._release(strategic, plans, solution), time_limits)
        tracker = EventTracker(self.thresholds)
        log = EpisodeLog(seed=seed, strategic_mode=strategic.value, tactical_mode=tactical.value)

        dt = self.engine_cfg.step_dt
        decision_every = max(1, int(round(self.engine_cfg.decision_dt / dt)))
        last_decision: Dict[str, Tuple[ObservationVector, SpeedAction]] = {}
        components = {"total": [], "safety": [], "time": [], "action": []}
        n_steps = 0
        max_steps = int(math.ceil(self.engine_cfg.max_sim_time / dt - 1e-9))

        def close_interval(state: AircraftState, next_obs: Optional[ObservationVector]) -> None:
            obs, action = last_decision.pop(state.flight_id)
            breakdown = reward(
                Transition(
                    min_distance=state.min_distance_since_decision,
                    action=action,
                    elapsed=state.airborne_elapsed,
                    time_limit=time_limits[state.flight_id],
                ),
                self.reward_params,
                self.thresholds,
            )
            for name in components:
                components[name].append(getattr(breakdown, name))
            controller.record(state.flight_id, obs, action, breakdown.total, next_obs)

        while not world.finished() and n_steps < max_steps:
            if controller is not None and n_steps % decision_every == 0:
                for state in world.airborne():
                    obs = observe(state.flight_id, world, controller.detection_mode, self.thresholds)
                    if state.flight_id in last_decision:
                        close_interval(state, obs)
                    action = controller.decide(state.flight_id, obs)
                    if action is not SpeedAction.HOLD:
                        state.alerts += 1
                    state.target_speed = next_target_speed(state.target_speed, action, perf)
                    state.min_distance_since_decision = math.inf
                    last_decision[state.flight_id] = (obs, action)

            step(world, dt)
            n_steps += 1
            log.min_distances.append(detect_events(world, tracker, self.thresholds))
            if controller is not None:
                for flight_id in world.newly_finished:
                    if flight_id in last_decision:
                        close_interval(world.aircraft[flight_id], None)
            if record_speeds:
                log.speed_trace.extend((world.t, s.flight_id, s.speed) for s in world.airborne())

        tracker.close_all(world.t)
        log.events = tracker.sorted_events()
        log.end_time = world.t
        log.truncated = not world.finished()
        if log.truncated:
            logger.warning(
                f"⚠️ episode seed={seed} truncated at {world.t:.0f}s "
                f"({len(world.airborne())} airborne, {len(world.pending())} not released)"
            )
        if controller is not None:
            log.reward_components = {name: math.fsum(values) for name, values in components.items()}

        for state in world.aircraft.values():
            if state.phase is Phase.AIRBORNE:
                actual = state.airborne_elapsed
            else:
                actual = state.actual_time if state.actual_time is not None else 0.0
            log.flights.append(FlightRecord(
                flight_id=state.flight_id,
                route_id=state.route_id,
                scheduled=state.scheduled_departure,
                required=state.release_time,
                estimated_time=unobstructed[state.flight_id],
                actual_time=actual,
                alerts=state.alerts,
                status=state.phase.value,
            ))
        return log


def run_episode(
    config: ScenarioConfig,
    strategic: StrategicMode,
    tactical: TacticalMode,
    seed: int,
    **kwargs,
) -> EpisodeLog:
    return SimulationEngine(config).run_episode(strategic, tactical, seed, **kwargs)


def _episode_job(args: Tuple[ScenarioConfig, StrategicMode, TacticalMode, int, Optional[PolicyTable]]) -> EpisodeLog:
    config, strategic, tactical, seed, policy = args
    return SimulationEngine(config).run_episode(strategic, tactical, seed, policy=policy)


def monte_carlo(
    config: ScenarioConfig,
    strategic: StrategicMode,
    tactical: TacticalMode,
    runs: int,
    base_seed: int,
    workers: int = 1,
    policy: Optional[PolicyTable] = None,
) -> List[EpisodeLog]:
    """
    Independent episodes with seeds base_seed + i and fresh demand per run

    Args:
        workers: process count; <= 1 runs in-process. Results do not depend on it.

    Returns:
        logs in seed order
    """
    if runs < 1:
        raise ExperimentConfigError(f"runs must be >= 1 (got {runs})")
    jobs = [(config, strategic, tactical, base_seed + i, policy) for i in range(runs)]
    if workers <= 1 or runs == 1:
        logs = [_episode_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            logs = list(pool.map(_episode_job, jobs))
    truncated = sum(1 for log in logs if log.truncated)
    if truncated:
        logger.warning(f"⚠️ {truncated}/{runs} episodes truncated")
    logger.info(f"✅ monte carlo: {runs} runs ({strategic.value}/{tactical.value}), seeds {base_seed}..{base_seed + runs - 1}")
    return logs
