#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Online heuristic demand capacity balancing (window-occupancy release rule)"""

import logging
import math
from collections import Counter
from typing import Dict, List, Optional, Sequence, Tuple

from models.airspace import AirspaceNetwork, FlightPlan
from models.dcb import DCBConfig, DCBSolution, DepartureRequest, WindowAssignment, window_index
from services.airspace_service import resource_offsets
from services.dcb_solver import resolve_horizon

logger = logging.getLogger(__name__)


class HeuristicDCB:
    """
    Releases a pending departure when separation since the previous release from the
    same origin has elapsed and every resource window it would reach still has room

    State (window occupancy, last release per origin) is owned by one simulation thread.
    """

    def __init__(self, cfg: DCBConfig, max_window: Optional[int] = None):
        """
        Args:
            cfg: window length, separation and capacities
            max_window: windows at or beyond this index are treated as full (None: unbounded)
        """
        self.cfg = cfg
        self.max_window = max_window
        self.occupancy: Counter = Counter()  # (resource, window) -> count
        self.last_release: Dict[str, float] = {}  # origin -> t
        self.released: Dict[str, float] = {}  # flight -> t
        self.assignment: Dict[Tuple[str, str], int] = {}
        self.blocked_by: Dict[str, str] = {}  # flight -> resource that last rejected it

    def _capacity(self, node: str) -> Optional[int]:
        return self.cfg.capacities.get(node)

    def blocking_resource(self, request: DepartureRequest, t: float) -> Optional[str]:
        """First resource whose window at t + offset is full or past the last window"""
        for node, offset in request.resource_offsets:
            n = window_index(t + offset, self.cfg.window_length)
            if self.max_window is not None and n >= self.max_window:
                return node
            cap = self._capacity(node)
            if cap is not None and self.occupancy[(node, n)] >= cap:
                return node
        return None

    def can_release(self, request: DepartureRequest, t: float) -> bool:
        last = self.last_release.get(request.origin)
        if last is not None and t - last < self.cfg.departure_separation - 1e-9:
            return False
        blocker = self.blocking_resource(request, t)
        if blocker is not None:
            self.blocked_by[request.flight_id] = blocker
            return False
        return True

    def release(self, request: DepartureRequest, t: float) -> None:
        for node, offset in request.resource_offsets:
            n = window_index(t + offset, self.cfg.window_length)
            self.occupancy[(node, n)] += 1
            self.assignment[(node, request.flight_id)] = n
        self.last_release[request.origin] = t
        self.released[request.flight_id] = t

    def solve_heuristic(self, pending: Sequence[DepartureRequest], t: float) -> List[DepartureRequest]:
        """
        One decision pass at clock t

        Args:
            pending: unreleased requests (any order; only those with request_time <= t are eligible)
            t: current simulation clock

        Returns:
            requests released at t, in (request time, flight id) order
        """
        released: List[DepartureRequest] = []
        blocked_origins = set()
        for request in sorted(pending, key=lambda r: (r.request_time, r.flight_id)):
            if request.request_time > t + 1e-9 or request.flight_id in self.released:
                continue
            # FIFO per origin: a held request holds everything queued behind it
            if request.origin in blocked_origins:
                continue
            if self.can_release(request, t):
                self.release(request, t)
                released.append(request)
            else:
                blocked_origins.add(request.origin)
        return released

    def run_offline(
        self,
        plans: Sequence[FlightPlan],
        dt: float = 1.0,
        network: Optional[AirspaceNetwork] = None,
    ) -> DCBSolution:
        """
        Drive the release rule with a simulated clock over a whole schedule

        Args:
            plans: flight plans (scheduled departure is the request time)
            dt: clock step, seconds
            network: used for transit offsets when plans carry none

        Returns:
            DCBSolution (status feasible, or infeasible when a request cannot go before the horizon)
        """
        requests = [to_request(p, network) for p in plans]
        horizon = resolve_horizon(plans, self.cfg, network)
        if self.max_window is None:
            self.max_window = int(math.floor(horizon / self.cfg.window_length + 1e-9))
        pending = list(requests)
        if not pending:
            return DCBSolution({}, WindowAssignment(window_length=self.cfg.window_length), 0.0, "feasible", solver="heuristic")

        t0 = min(r.request_time for r in pending)
        step = 0
        t = t0
        while pending and t < horizon:
            released = self.solve_heuristic(pending, t)
            if released:
                done = {r.flight_id for r in released}
                pending = [r for r in pending if r.flight_id not in done]
            step += 1
            t = t0 + step * dt

        if pending:
            # requests held only by separation or FIFO carry no entry
            waiting = sorted(pending, key=lambda r: (r.request_time, r.flight_id))
            binding = next((self.blocked_by[r.flight_id] for r in waiting if r.flight_id in self.blocked_by), None)
            logger.info(f"ℹ️ heuristic DCB: {len(pending)} request(s) not released before horizon {horizon:.0f}s")
            return DCBSolution(
                required_departures={},
                assignment=WindowAssignment(window_length=self.cfg.window_length),
                total_delay=0.0,
                status="infeasible",
                binding_resource=binding,
                solver="heuristic",
            )

        by_id = {p.flight_id: p for p in plans}
        delays = [max(0.0, self.released[fid] - by_id[fid].scheduled_departure) for fid in by_id]
        return DCBSolution(
            required_departures={fid: self.released[fid] for fid in by_id},
            assignment=WindowAssignment(entries=dict(self.assignment), window_length=self.cfg.window_length),
            total_delay=math.fsum(delays),
            status="feasible",
            solver="heuristic",
        )


def to_request(plan: FlightPlan, network: Optional[AirspaceNetwork] = None) -> DepartureRequest:
    offsets = plan.resource_offsets
    if not offsets and network is not None:
        offsets = resource_offsets(network, plan.route_id)
    return DepartureRequest(
        flight_id=plan.flight_id,
        route_id=plan.route_id,
        origin=plan.origin,
        request_time=plan.scheduled_departure,
        resource_offsets=offsets,
    )


def solve_heuristic(pending: Sequence[DepartureRequest], state: HeuristicDCB, t: float) -> List[DepartureRequest]:
    return state.solve_heuristic(pending, t)
