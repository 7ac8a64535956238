"""Strategic, tactical, simulation and metric services"""
from .airspace_service import AirspaceService, generate_schedule, validate_scenario
from .dcb_solver import ExactDCBSolver, brute_force_oracle, solve_exact, validate_solution
from .dcb_heuristic import HeuristicDCB, solve_heuristic
from .tactical_policy import observe, reward, rule_based_policy
from .game_analyzer import enumerate_equilibria
from .policy_learner import PolicyTable, policy_act
from .simulation_engine import SimulationEngine, detect_events, monte_carlo, run_episode, step
from .policy_trainer import build_pool, train_policy
from .metrics_service import aggregate, calibrate_p_mac_given_nmac, capacity_sweep, estimate_mac, risk_ratio

__all__ = [
    "AirspaceService",
    "generate_schedule",
    "validate_scenario",
    "ExactDCBSolver",
    "brute_force_oracle",
    "solve_exact",
    "validate_solution",
    "HeuristicDCB",
    "solve_heuristic",
    "observe",
    "reward",
    "rule_based_policy",
    "enumerate_equilibria",
    "PolicyTable",
    "policy_act",
    "SimulationEngine",
    "detect_events",
    "monte_carlo",
    "run_episode",
    "step",
    "build_pool",
    "train_policy",
    "aggregate",
    "calibrate_p_mac_given_nmac",
    "capacity_sweep",
    "estimate_mac",
    "risk_ratio",
]
