#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Integrated conflict management engine
- scenario resolution (file + overrides + capacity/demand)
- strategic balancing, tactical training, simulation and metrics behind one object
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

from config.scenario_loader import ScenarioConfig, ScenarioLoader, parse_scenario
from config.settings import DEMAND_PRESETS
from errors import ExperimentConfigError, ScenarioValidationError
from models.airspace import FlightPlan
from models.dcb import DCBSolution, ValidationReport
from models.metrics import PUBLISHED_P_MAC_GIVEN_NMAC, CalibrationResult, MethodRow, RiskModelParams, SweepResult
from models.simulation import EpisodeLog, StrategicMode, TacticalMode
from models.tactical import CostMatrix, CurvePoint, DetectionMode, EquilibriumReport
from services.airspace_service import AirspaceService, validate_scenario
from services.dcb_heuristic import HeuristicDCB
from services.dcb_solver import apply_solution, solve_exact, validate_solution, window_histogram
from services.game_analyzer import enumerate_equilibria
from services.metrics_service import calibrate_p_mac_given_nmac, capacity_sweep, compare_methods
from services.policy_learner import PolicyTable
from services.policy_trainer import build_pool, train_policy
from services.simulation_engine import SimulationEngine, monte_carlo

logger = logging.getLogger(__name__)


def parse_demand(value: Optional[str]) -> Optional[float]:
    """'high' / 'medium' / 'low' or a number of seconds"""
    if value is None:
        return None
    if value in DEMAND_PRESETS:
        return DEMAND_PRESETS[value]
    try:
        seconds = float(value)
    except ValueError:
        raise ExperimentConfigError(f"demand must be one of {sorted(DEMAND_PRESETS)} or seconds (got '{value}')")
    if seconds <= 0:
        raise ExperimentConfigError(f"demand interval must be > 0 (got {seconds})")
    return seconds


class IntegratedConflictEngine:
    """Facade composing every service"""

    def __init__(self, loader: Optional[ScenarioLoader] = None):
        self.loader = loader or ScenarioLoader()

    # ---------- scenario ----------

    def resolve_scenario(
        self,
        name_or_path: str,
        overrides: Optional[Dict[str, Any]] = None,
        capacity: Optional[int] = None,
        demand: Optional[str] = None,
        inline: Optional[Dict[str, Any]] = None,
    ) -> ScenarioConfig:
        """
        Load, layer and validate a scenario

        Args:
            name_or_path: bundled name or JSON path (ignored when inline is given)
            overrides: partial document deep-merged over the scenario
            capacity: same capacity on every resource
            demand: preset name or mean interval in seconds
            inline: complete scenario document (manifest replay)

        Raises:
            ScenarioValidationError: schema or invariant violations
        """
        if inline is not None:
            config = parse_scenario(inline, source="manifest")
        else:
            config = self.loader.get_scenario(name_or_path)
        if overrides:
            config = config.with_overrides(overrides)
        if capacity is not None:
            config = config.with_capacity(capacity)
        interval = parse_demand(demand)
        if interval is not None:
            config = config.with_mean_interval(interval)
        report = validate_scenario(config)
        if not report.ok:
            raise ScenarioValidationError(f"scenario '{config.name}' is invalid", report.to_dicts())
        return config

    # ---------- strategic ----------

    def schedule(self, config: ScenarioConfig, seed: int) -> List[FlightPlan]:
        return AirspaceService(config).flight_plans(seed)

    def balance(self, config: ScenarioConfig, plans: Sequence[FlightPlan], method: StrategicMode) -> Tuple[DCBSolution, ValidationReport, Dict, Dict]:
        """
        Solve DCB and check the result

        Returns:
            (solution, validation report, histogram before, histogram after)
        """
        network = config.network()
        cfg = config.dcb_config()
        if method is StrategicMode.HEURISTIC:
            solution = HeuristicDCB(cfg).run_offline(plans, dt=config.engine.step_dt, network=network)
        else:
            solution = solve_exact(plans, network, cfg)
        report = validate_solution(solution, plans, network, cfg)
        before = window_histogram(plans, network, cfg, use_required=False)
        after = window_histogram(apply_solution(plans, solution), network, cfg, use_required=True) if solution.status != "infeasible" else {}
        return solution, report, before, after

    # ---------- simulation ----------

    def simulate(self, config: ScenarioConfig, strategic: StrategicMode, tactical: TacticalMode, seed: int,
                 policy: Optional[PolicyTable] = None, record_speeds: bool = False) -> EpisodeLog:
        return SimulationEngine(config).run_episode(strategic, tactical, seed, policy=policy, record_speeds=record_speeds)

    def montecarlo(self, config: ScenarioConfig, strategic: StrategicMode, tactical: TacticalMode,
                   runs: int, seed: int, workers: int, policy: Optional[PolicyTable] = None) -> List[EpisodeLog]:
        return monte_carlo(config, strategic, tactical, runs, seed, workers, policy)

    def risk_params(self, config: ScenarioConfig, preset: str, seed: int, workers: int) -> Tuple[RiskModelParams, Optional[CalibrationResult]]:
        """
        P(MAC|NMAC) from unmitigated runs ("calibrated") or the published constant ("published")

        Falls back to the scenario's configured value when calibration sees no NMAC.
        """
        beta = config.risk.acasx_risk_ratio
        if preset == "published":
            return RiskModelParams(p_mac_given_nmac=PUBLISHED_P_MAC_GIVEN_NMAC, acasx_risk_ratio=beta), None
        if preset != "calibrated":
            raise ExperimentConfigError(f"unknown risk preset '{preset}'")
        if not config.risk.calibrate:
            return config.risk_params(), None
        logs = monte_carlo(config, StrategicMode.NONE, TacticalMode.NONE, config.risk.calibration_runs, seed, workers)
        calibration = calibrate_p_mac_given_nmac(logs)
        if not calibration.defined:
            logger.warning(f"⚠️ calibration undefined, using configured P(MAC|NMAC)={config.risk.p_mac_given_nmac}")
            return config.risk_params(), calibration
        logger.info(f"ℹ️ calibrated P(MAC|NMAC)={calibration.p_mac_given_nmac:.6g} "
                    f"({calibration.n_mac}/{calibration.n_nmac})")
        return RiskModelParams(p_mac_given_nmac=calibration.p_mac_given_nmac, acasx_risk_ratio=beta), calibration

    def sweep(self, config: ScenarioConfig, tactical: TacticalMode, capacities: Sequence[int], runs: int,
              params: RiskModelParams, seed: int, workers: int, policy: Optional[PolicyTable] = None) -> SweepResult:
        return capacity_sweep(config, tactical, capacities, runs, params, seed, workers, policy)

    def compare(self, config: ScenarioConfig, runs: int, params: RiskModelParams, seed: int, workers: int,
                rule_capacity: Optional[int], policy: Optional[PolicyTable], policy_capacity: Optional[int],
                capacities: Sequence[int]) -> List[MethodRow]:
        """Capacities left as None are picked by a TLS sweep over `capacities`"""
        return compare_methods(config, runs, params, seed, workers, rule_capacity, policy, policy_capacity, capacities)

    # ---------- tactical ----------

    def train(self, config: ScenarioConfig, mode: DetectionMode, seed: int, episodes: Optional[int],
              strategic: StrategicMode, workers: int) -> Tuple[PolicyTable, List[CurvePoint]]:
        pool = build_pool(config, config.learner.pool_size, seed, strategic)
        return train_policy(config, pool, mode, seed, episodes=episodes, strategic=strategic, workers=workers)

    def equilibria(self, game: Optional[str] = None) -> Tuple[CostMatrix, EquilibriumReport]:
        matrix = self.loader.load_game(game or "merge_cost_table")
        return matrix, enumerate_equilibria(matrix)
