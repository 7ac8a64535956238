#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Demand capacity balancing: exact window-assignment solver, brute-force oracle, solution validation

Flights are processed in (scheduled departure, flight id) order. Departure
separation applies per origin in that order (FIFO per origin), so both the
exact solver and the oracle search the same feasible set.
"""

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix, csr_matrix

from errors import InstanceTooLargeError
from models.airspace import AirspaceNetwork, FlightPlan
from models.dcb import WINDOW_EPS, DCBConfig, DCBSolution, ValidationReport, WindowAssignment, window_index
from services.airspace_service import resource_offsets

logger = logging.getLogger(__name__)

ORACLE_MAX_FLIGHTS = 8
ORACLE_MAX_RESOURCES = 2
TOLERANCE = 1e-9
# departures stay this far below a cell end so arrivals never reach the next window
BOUNDARY_GAP = 1e-6


@dataclass(frozen=True)
class _Flight:
    flight_id: str
    scheduled: float
    origin: str
    legs: Tuple[Tuple[int, float], ...]  # (resource index, transit time)


@dataclass(frozen=True)
class _Problem:
    flights: Tuple[_Flight, ...]
    resources: Tuple[str, ...]
    capacities: Tuple[int, ...]
    window_length: float
    separation: float
    n_windows: int


def _offsets_of(plan: FlightPlan, network: Optional[AirspaceNetwork]) -> Tuple[Tuple[str, float], ...]:
    if plan.resource_offsets or network is None:
        return plan.resource_offsets
    return resource_offsets(network, plan.route_id)


def resolve_horizon(plans: Sequence[FlightPlan], cfg: DCBConfig, network: Optional[AirspaceNetwork] = None) -> float:
    """
    Last window end; derived from the schedule when the config leaves it open

    Default: max S + max transit + n * max(W, Delta) + W, rounded up to a whole window
    """
    if cfg.horizon is not None:
        return cfg.horizon
    W = cfg.window_length
    if not plans:
        return W
    max_s = max(p.scheduled_departure for p in plans)
    max_t = max((t for p in plans for _node, t in _offsets_of(p, network)), default=0.0)
    raw = max_s + max_t + len(plans) * max(W, cfg.departure_separation) + W
    return math.ceil(raw / W) * W


def _prepare(plans: Sequence[FlightPlan], network: Optional[AirspaceNetwork], cfg: DCBConfig) -> _Problem:
    ordered = sorted(plans, key=lambda p: (p.scheduled_departure, p.flight_id))
    offsets = {p.flight_id: _offsets_of(p, network) for p in ordered}

    names: List[str] = []
    for p in ordered:
        for node, _t in offsets[p.flight_id]:
            if node not in names:
                names.append(node)
    index = {name: i for i, name in enumerate(names)}

    capacities = []
    for name in names:
        cap = cfg.capacities.get(name)
        if cap is None and network is not None and name in network.resources:
            cap = network.resources[name].capacity
        # an uncapacitated point can never bind
        capacities.append(cap if cap is not None else max(1, len(ordered)))

    flights = tuple(
        _Flight(
            flight_id=p.flight_id,
            scheduled=p.scheduled_departure,
            origin=p.origin,
            legs=tuple((index[node], t) for node, t in offsets[p.flight_id]),
        )
        for p in ordered
    )
    horizon = resolve_horizon(ordered, cfg, network)
    n_windows = int(math.floor(horizon / cfg.window_length + 1e-9))
    return _Problem(
        flights=flights,
        resources=tuple(names),
        capacities=tuple(capacities),
        window_length=cfg.window_length,
        separation=cfg.departure_separation,
        n_windows=n_windows,
    )


def _solution(problem: _Problem, departures: Sequence[float], status: str, solver: str,
              nodes: int = 0, binding: Optional[str] = None) -> DCBSolution:
    W = problem.window_length
    required: Dict[str, float] = {}
    entries: Dict[Tuple[str, str], int] = {}
    delays = []
    for f, r in zip(problem.flights, departures):
        required[f.flight_id] = r
        delays.append(max(0.0, r - f.scheduled))
        for res, t in f.legs:
            entries[(problem.resources[res], f.flight_id)] = window_index(r + t, W)
    return DCBSolution(
        required_departures=required,
        assignment=WindowAssignment(entries=entries, window_length=W),
        total_delay=math.fsum(delays),
        status=status,
        binding_resource=binding,
        solver=solver,
        nodes_explored=nodes,
    )


def _infeasible(problem: _Problem, solver: str, nodes: int, binding: Optional[str]) -> DCBSolution:
    return DCBSolution(
        required_departures={},
        assignment=WindowAssignment(window_length=problem.window_length),
        total_delay=0.0,
        status="infeasible",
        binding_resource=binding,
        solver=solver,
        nodes_explored=nodes,
    )


@dataclass(frozen=True)
class _Cell:
    """Departure interval [start, end) over which every leg keeps the same window"""
    start: float
    end: float
    windows: Tuple[int, ...]  # one per leg


@dataclass
class _Model:
    cost: np.ndarray
    integrality: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    matrix: Optional[csr_matrix]
    row_lower: np.ndarray
    row_upper: np.ndarray
    cell_columns: List[List[int]]  # per flight, one column per cell


def _chain_floors(problem: _Problem) -> List[float]:
    last: Dict[str, float] = {}
    floors = []
    for flight in problem.flights:
        r = flight.scheduled
        if flight.origin in last:
            r = max(r, last[flight.origin] + problem.separation)
        last[flight.origin] = r
        floors.append(r)
    return floors


def _fits(problem: _Problem, departures: Sequence[float]) -> bool:
    occupancy: Counter = Counter()
    for flight, r in zip(problem.flights, departures):
        for res, t in flight.legs:
            n = window_index(r + t, problem.window_length)
            if n >= problem.n_windows:
                return False
            occupancy[(res, n)] += 1
            if occupancy[(res, n)] > problem.capacities[res]:
                return False
    return True


class ExactDCBSolver:
    """
    Branch-and-bound over per-flight window choices, run by the HiGHS MIP solver

    Each flight picks one departure cell: an interval between consecutive
    instants B_n - T_i where every resource on its route keeps the same window.
    Linking rows pin the departure inside its cell, separation rows chain the
    flights of one origin in (S, id) order, and capacity rows bound each
    (resource, window). Same-origin flights on the same route cannot swap cells,
    which is added as cumulative ordering cuts. The LP relaxation gives the
    delay lower bound; departures are then recomputed as the earliest instants
    the chosen cells and the separation chain allow.
    """

    def __init__(self, cfg: DCBConfig, network: Optional[AirspaceNetwork] = None):
        self.cfg = cfg
        self.network = network

    def solve(self, plans: Sequence[FlightPlan]) -> DCBSolution:
        """
        Minimise total ground delay subject to separation, non-anticipation and capacity

        Args:
            plans: flight plans (required departures are ignored)

        Returns:
            DCBSolution with status optimal, feasible (node budget exhausted) or infeasible
        """
        problem = _prepare(plans, self.network, self.cfg)
        if not problem.flights:
            return _solution(problem, [], "optimal", "exact")

        # every flight at its own lower bound: nothing to balance
        floors = _chain_floors(problem)
        if _fits(problem, floors):
            logger.debug("✅ exact DCB: schedule already within capacity")
            return _solution(problem, floors, "optimal", "exact")

        cells = [self._cells(problem, flight) for flight in problem.flights]
        stranded = [f for f, c in zip(problem.flights, cells) if f.legs and not c]
        if stranded:
            res = max(stranded[0].legs, key=lambda leg: leg[1])[0]
            logger.info(f"ℹ️ exact DCB: '{stranded[0].flight_id}' cannot reach the horizon windows")
            return _infeasible(problem, "exact", 0, problem.resources[res])

        model = self._build(problem, cells, range(len(problem.resources)))
        result = self._run(model)
        nodes = int(getattr(result, "mip_node_count", 0) or 0)

        if result.x is None:
            if result.status == 1:
                logger.warning(f"⚠️ exact DCB: node budget {self.cfg.max_nodes} exhausted before any feasible schedule")
                return _infeasible(problem, "exact", nodes, None)
            binding = self._binding_resource(problem, cells)
            logger.info(f"ℹ️ exact DCB: infeasible within horizon (binding resource {binding})")
            return _infeasible(problem, "exact", nodes, binding)

        departures = self._departures(problem, cells, model, result.x)
        status = "optimal" if result.status == 0 else "feasible"
        solution = _solution(problem, departures, status, "exact", nodes=nodes)
        if status == "feasible":
            logger.warning(
                f"⚠️ exact DCB: node budget {self.cfg.max_nodes} exhausted, returning incumbent "
                f"(total delay {solution.total_delay:.1f}s)"
            )
        logger.debug(f"✅ exact DCB: {status}, total delay {solution.total_delay:.1f}s, {nodes} nodes")
        return solution

    # ---------- model ----------

    @staticmethod
    def _cells(problem: _Problem, flight: _Flight) -> List[_Cell]:
        if not flight.legs:
            return []
        W = problem.window_length
        end = min(problem.n_windows * W - t for _res, t in flight.legs)
        cuts = sorted({
            n * W - t
            for _res, t in flight.legs
            for n in range(1, problem.n_windows)
            if flight.scheduled < n * W - t < end
        })
        starts = [flight.scheduled]
        for cut in cuts:
            if cut - starts[-1] > WINDOW_EPS:
                starts.append(cut)
        cells = []
        for start, stop in zip(starts, starts[1:] + [end]):
            if stop - start <= BOUNDARY_GAP:
                continue
            windows = tuple(window_index(start + t, W) for _res, t in flight.legs)
            cells.append(_Cell(start=start, end=stop, windows=windows))
        return cells

    def _build(self, problem: _Problem, cells: List[List[_Cell]], capacity_resources: Iterable[int]) -> _Model:
        n_flights = len(problem.flights)
        cell_columns: List[List[int]] = []
        column = n_flights
        for flight_cells in cells:
            cell_columns.append(list(range(column, column + len(flight_cells))))
            column += len(flight_cells)
        n_columns = column

        cost = np.zeros(n_columns)
        cost[:n_flights] = 1.0
        integrality = np.ones(n_columns)
        integrality[:n_flights] = 0
        lower = np.zeros(n_columns)
        upper = np.ones(n_columns)
        for j, flight in enumerate(problem.flights):
            lower[j] = flight.scheduled
            upper[j] = cells[j][-1].end - BOUNDARY_GAP if cells[j] else np.inf

        rows: List[int] = []
        cols: List[int] = []
        vals: List[float] = []
        row_lower: List[float] = []
        row_upper: List[float] = []

        def add_row(entries: Iterable[Tuple[int, float]], lo: float, hi: float) -> None:
            k = len(row_lower)
            for col, val in entries:
                rows.append(k)
                cols.append(col)
                vals.append(val)
            row_lower.append(lo)
            row_upper.append(hi)

        previous: Dict[str, int] = {}
        for j, flight in enumerate(problem.flights):
            ys = cell_columns[j]
            if ys:
                add_row(((y, 1.0) for y in ys), 1.0, 1.0)
                add_row([(j, 1.0)] + [(y, -c.start) for y, c in zip(ys, cells[j])], 0.0, np.inf)
                add_row([(j, 1.0)] + [(y, -(c.end - BOUNDARY_GAP)) for y, c in zip(ys, cells[j])], -np.inf, 0.0)

            p = previous.get(flight.origin)
            previous[flight.origin] = j
            if p is None:
                continue
            add_row([(j, 1.0), (p, -1.0)], problem.separation, np.inf)
            if ys and problem.flights[p].legs == flight.legs:
                # j departs after p, so j ending by a cut means p ended by it too
                for cut in (c.end for c in cells[j][:-1]):
                    mine = [(y, 1.0) for y, c in zip(ys, cells[j]) if c.end <= cut + WINDOW_EPS]
                    theirs = [(y, -1.0) for y, c in zip(cell_columns[p], cells[p]) if c.end <= cut + WINDOW_EPS]
                    add_row(mine + theirs, -np.inf, 0.0)

        for res in capacity_resources:
            users: Dict[int, List[int]] = {}
            for j, flight in enumerate(problem.flights):
                for leg, (leg_res, _t) in enumerate(flight.legs):
                    if leg_res != res:
                        continue
                    for y, c in zip(cell_columns[j], cells[j]):
                        users.setdefault(c.windows[leg], []).append(y)
            for n in sorted(users):
                if len(users[n]) > problem.capacities[res]:
                    add_row(((y, 1.0) for y in users[n]), -np.inf, float(problem.capacities[res]))

        matrix = None
        if row_lower:
            matrix = coo_matrix((vals, (rows, cols)), shape=(len(row_lower), n_columns)).tocsr()
        return _Model(
            cost=cost,
            integrality=integrality,
            lower=lower,
            upper=upper,
            matrix=matrix,
            row_lower=np.asarray(row_lower, dtype=float),
            row_upper=np.asarray(row_upper, dtype=float),
            cell_columns=cell_columns,
        )

    def _run(self, model: _Model):
        constraints = None
        if model.matrix is not None:
            constraints = LinearConstraint(model.matrix, model.row_lower, model.row_upper)
        return milp(
            c=model.cost,
            integrality=model.integrality,
            bounds=Bounds(model.lower, model.upper),
            constraints=constraints,
            options={"node_limit": self.cfg.max_nodes, "mip_rel_gap": 0.0, "presolve": True},
        )

    @staticmethod
    def _departures(problem: _Problem, cells: List[List[_Cell]], model: _Model, x: np.ndarray) -> List[float]:
        """Earliest departures for the chosen cells; never later than the solver's own values"""
        last: Dict[str, float] = {}
        departures = []
        for j, flight in enumerate(problem.flights):
            r = flight.scheduled
            if flight.origin in last:
                r = max(r, last[flight.origin] + problem.separation)
            if model.cell_columns[j]:
                chosen = int(np.argmax(x[model.cell_columns[j]]))
                r = max(r, cells[j][chosen].start)
            last[flight.origin] = r
            departures.append(r)
        return departures

    def _binding_resource(self, problem: _Problem, cells: List[List[_Cell]]) -> Optional[str]:
        """First resource that is infeasible on its own; otherwise the most loaded one"""
        for res in range(len(problem.resources)):
            if self._run(self._build(problem, cells, [res])).status == 2:
                return problem.resources[res]
        if not problem.resources:
            return None
        demand = Counter(res for flight in problem.flights for res, _t in flight.legs)
        return problem.resources[max(
            range(len(problem.resources)),
            key=lambda res: demand[res] / problem.capacities[res],
        )]


def solve_exact(plans: Sequence[FlightPlan], network: Optional[AirspaceNetwork], cfg: DCBConfig) -> DCBSolution:
    return ExactDCBSolver(cfg, network).solve(plans)


def brute_force_oracle(plans: Sequence[FlightPlan], network: Optional[AirspaceNetwork], cfg: DCBConfig) -> DCBSolution:
    """
    Enumerate every window assignment and keep the cheapest feasible one

    Only capacity and chain-consistency rejections are applied while enumerating;
    there is no cost-based pruning. Ties keep the lexicographically earliest departures.

    Raises:
        InstanceTooLargeError: more than 8 flights or more than 2 resources
    """
    if len(plans) > ORACLE_MAX_FLIGHTS:
        raise InstanceTooLargeError(f"oracle accepts at most {ORACLE_MAX_FLIGHTS} flights (got {len(plans)})")
    problem = _prepare(plans, network, cfg)
    if len(problem.resources) > ORACLE_MAX_RESOURCES:
        raise InstanceTooLargeError(
            f"oracle accepts at most {ORACLE_MAX_RESOURCES} resources (got {len(problem.resources)})"
        )
    if not problem.flights:
        return _solution(problem, [], "optimal", "oracle")

    W = problem.window_length
    best: Dict[str, object] = {"cost": math.inf, "departures": None}
    occupancy = [[0] * problem.n_windows for _ in problem.resources]
    leaves = [0]

    def enumerate_from(k: int, cost: float, last: Dict[str, float], chosen: List[float]) -> None:
        if k == len(problem.flights):
            leaves[0] += 1
            incumbent = best["departures"]
            if cost < best["cost"] - TOLERANCE or (
                abs(cost - best["cost"]) <= TOLERANCE and incumbent is not None and tuple(chosen) < tuple(incumbent)
            ):
                best["cost"] = cost
                best["departures"] = list(chosen)
            return
        flight = problem.flights[k]
        floor_r = flight.scheduled
        if flight.origin in last:
            floor_r = max(floor_r, last[flight.origin] + problem.separation)
        for windows in itertools.product(range(problem.n_windows), repeat=len(flight.legs)):
            r = max([floor_r] + [n * W - t for (_res, t), n in zip(flight.legs, windows)])
            if any(window_index(r + t, W) != n for (_res, t), n in zip(flight.legs, windows)):
                continue
            if any(occupancy[res][n] >= problem.capacities[res] for (res, _t), n in zip(flight.legs, windows)):
                continue
            for (res, _t), n in zip(flight.legs, windows):
                occupancy[res][n] += 1
            previous = last.get(flight.origin)
            last[flight.origin] = r
            chosen.append(r)
            enumerate_from(k + 1, cost + (r - flight.scheduled), last, chosen)
            chosen.pop()
            if previous is None:
                del last[flight.origin]
            else:
                last[flight.origin] = previous
            for (res, _t), n in zip(flight.legs, windows):
                occupancy[res][n] -= 1

    enumerate_from(0, 0.0, {}, [])
    if best["departures"] is None:
        return _infeasible(problem, "oracle", leaves[0], None)
    return _solution(problem, best["departures"], "optimal", "oracle", nodes=leaves[0])


def validate_solution(
    sol: DCBSolution,
    plans: Sequence[FlightPlan],
    network: Optional[AirspaceNetwork],
    cfg: DCBConfig,
) -> ValidationReport:
    """
    Recompute arrival windows from the solution's departures and report every violation

    Args:
        sol: output of any solver
        plans: the instance it was solved for
        network: used for transit offsets when plans carry none
        cfg: capacities, window length and separation

    Returns:
        ValidationReport (capacity, separation, non_anticipation, assignment, objective)
    """
    report = ValidationReport()
    if sol.status == "infeasible":
        return report

    W = cfg.window_length
    delays = []
    by_origin: Dict[str, List[Tuple[float, float, str]]] = {}
    counts: Counter = Counter()
    capacity_of: Dict[str, Optional[int]] = {}

    for plan in plans:
        fid = plan.flight_id
        if fid not in sol.required_departures:
            report.add("assignment", f"required_departures.{fid}", f"flight '{fid}' has no required departure")
            continue
        r = sol.required_departures[fid]
        if r < plan.scheduled_departure - TOLERANCE:
            report.add(
                "non_anticipation",
                f"required_departures.{fid}",
                f"flight '{fid}' departs at {r:.3f}s before its scheduled {plan.scheduled_departure:.3f}s",
            )
        delays.append(max(0.0, r - plan.scheduled_departure))
        by_origin.setdefault(plan.origin, []).append((r, plan.scheduled_departure, fid))

        for node, t in _offsets_of(plan, network):
            n = window_index(r + t, W)
            counts[(node, n)] += 1
            if node not in capacity_of:
                cap = cfg.capacities.get(node)
                if cap is None and network is not None and node in network.resources:
                    cap = network.resources[node].capacity
                capacity_of[node] = cap
            recorded = sol.assignment.entries.get((node, fid))
            if recorded is None:
                report.add("assignment", f"assignment.{node}.{fid}", f"flight '{fid}' has no window at '{node}'")
            elif recorded != n:
                report.add(
                    "assignment",
                    f"assignment.{node}.{fid}",
                    f"flight '{fid}' recorded in window {recorded} at '{node}' but arrives in window {n}",
                )

    for origin, releases in sorted(by_origin.items()):
        releases.sort()
        for (r_a, _s_a, f_a), (r_b, _s_b, f_b) in zip(releases[:-1], releases[1:]):
            if r_b - r_a < cfg.departure_separation - TOLERANCE:
                report.add(
                    "separation",
                    f"origins.{origin}",
                    f"'{f_a}' and '{f_b}' depart {r_b - r_a:.3f}s apart (< {cfg.departure_separation}s)",
                )

    for (node, n), count in sorted(counts.items()):
        cap = capacity_of.get(node)
        if cap is not None and count > cap:
            report.add(
                "capacity",
                f"resources.{node}.windows.{n}",
                f"resource '{node}' window {n} holds {count} flights (capacity {cap})",
            )

    total = math.fsum(delays)
    if abs(total - sol.total_delay) > 1e-6:
        report.add("objective", "total_delay", f"reported {sol.total_delay:.6f}s but departures give {total:.6f}s")

    if not report.ok:
        logger.warning(f"⚠️ {sol.solver} solution failed validation: {len(report.violations)} violation(s)")
    return report


def window_histogram(
    plans: Sequence[FlightPlan],
    network: Optional[AirspaceNetwork],
    cfg: DCBConfig,
    use_required: bool = True,
) -> Dict[Tuple[str, int], int]:
    """Arrivals per (resource, window) using required (or scheduled) departures"""
    counts: Counter = Counter()
    for plan in plans:
        if not plan.resource_offsets:
            plan = replace(plan, resource_offsets=_offsets_of(plan, network))
        for node, _t in plan.resource_offsets:
            counts[(node, window_index(plan.eta_at_resource(node, required=use_required), cfg.window_length))] += 1
    return dict(sorted(counts.items()))


def apply_solution(plans: Sequence[FlightPlan], sol: DCBSolution) -> List[FlightPlan]:
    """Copy plans with required departures taken from the solution"""
    return [
        p.with_required(sol.required_departures.get(p.flight_id, p.required_departure))
        for p in plans
    ]
