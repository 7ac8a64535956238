#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Safety and efficiency metrics over episode logs"""

import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from config.scenario_loader import ScenarioConfig
from models.metrics import (
    TARGET_LEVEL_OF_SAFETY,
    CalibrationResult,
    MacEstimate,
    MethodRow,
    MetricsReport,
    RiskModelParams,
    SweepResult,
    SweepRow,
)
from models.simulation import EpisodeLog, StrategicMode, TacticalMode
from services.policy_learner import PolicyTable
from services.simulation_engine import monte_carlo

logger = logging.getLogger(__name__)

PER_100K = 100_000.0
DEFAULT_SWEEP_CAPACITIES = (1, 2, 3, 4, 5, 6, 7, 8)


def estimate_mac(n_nmac: int, flight_hours: float, params: RiskModelParams) -> MacEstimate:
    """
    Expected MACs = P(MAC|NMAC) * beta * NMAC count, and the rate per 100,000 flight hours

    Raises:
        ValueError: flight_hours <= 0
    """
    if not flight_hours > 0:
        raise ValueError(f"flight hours must be > 0 (got {flight_hours})")
    expected = params.p_mac_given_nmac * params.acasx_risk_ratio * n_nmac
    return MacEstimate(expected_macs=expected, rate_per_100k_fh=expected / flight_hours * PER_100K)


def calibrate_p_mac_given_nmac(logs: Sequence[EpisodeLog], confidence: float = 0.95) -> CalibrationResult:
    """
    Pooled MAC / NMAC ratio over unmitigated runs with a Clopper-Pearson interval

    Returns an undefined result (p None) when no NMAC was observed.
    """
    n_mac = sum(log.count("MAC") for log in logs)
    n_nmac = sum(log.count("NMAC") for log in logs)
    if n_nmac == 0:
        logger.warning("⚠️ calibration: no NMAC events observed, P(MAC|NMAC) undefined")
        return CalibrationResult(p_mac_given_nmac=None, n_mac=n_mac, n_nmac=0)
    tail = (1.0 - confidence) / 2.0
    low = 0.0 if n_mac == 0 else float(stats.beta.ppf(tail, n_mac, n_nmac - n_mac + 1))
    high = 1.0 if n_mac == n_nmac else float(stats.beta.ppf(1.0 - tail, n_mac + 1, n_nmac - n_mac))
    return CalibrationResult(p_mac_given_nmac=n_mac / n_nmac, n_mac=n_mac, n_nmac=n_nmac, ci_low=low, ci_high=high)


def risk_ratio(method: Union[MetricsReport, float], baseline: Union[MetricsReport, float]) -> Optional[float]:
    """Method est-MAC rate divided by the unmitigated baseline's; None when the baseline rate is zero"""
    m = method.est_mac_per_100k_fh if isinstance(method, MetricsReport) else float(method)
    b = baseline.est_mac_per_100k_fh if isinstance(baseline, MetricsReport) else float(baseline)
    if b <= 0:
        return None
    return m / b


def _mean_ci(values: Sequence[float], confidence: float = 0.95) -> Tuple[float, Tuple[float, float]]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2 or min(values) == max(values):
        return mean, (mean, mean)
    sd = float(np.std(np.sort(np.asarray(values, dtype=float)), ddof=1))
    half = float(stats.t.ppf(0.5 + confidence / 2.0, n - 1)) * sd / math.sqrt(n)
    return mean, (mean - half, mean + half)


def aggregate(
    logs: Sequence[EpisodeLog],
    params: RiskModelParams,
    baseline: Optional[MetricsReport] = None,
    pooled: bool = False,
) -> MetricsReport:
    """
    Safety rates per run then averaged; efficiency metrics averaged per flight

    Args:
        logs: one or more episode logs
        params: estimated-MAC chain constants
        baseline: unmitigated report for the risk ratio
        pooled: rates from pooled counts instead of per-run averages

    Returns:
        MetricsReport with 95% t-intervals on the safety rates
    """
    if not logs:
        raise ValueError("aggregate needs at least one log")

    lowc_rates, nmac_rates, mac_rates = [], [], []
    for log in logs:
        fh = log.total_flight_hours
        if fh <= 0:
            lowc_rates.append(0.0)
            nmac_rates.append(0.0)
            mac_rates.append(0.0)
            continue
        lowc_rates.append(log.count("LoWC") / fh)
        nmac_rates.append(log.count("NMAC") / fh)
        mac_rates.append(estimate_mac(log.count("NMAC"), fh, params).rate_per_100k_fh)

    flights = [f for log in logs for f in log.flights if f.required is not None]
    total_fh = math.fsum(log.total_flight_hours for log in logs)

    report = MetricsReport(run_count=len(logs), flight_hours=total_fh)
    if pooled and total_fh > 0:
        report.lowc_per_fh = sum(log.count("LoWC") for log in logs) / total_fh
        report.nmac_per_fh = sum(log.count("NMAC") for log in logs) / total_fh
        report.est_mac_per_100k_fh = estimate_mac(sum(log.count("NMAC") for log in logs), total_fh, params).rate_per_100k_fh
    else:
        for name, values in (("lowc_per_fh", lowc_rates), ("nmac_per_fh", nmac_rates), ("est_mac_per_100k_fh", mac_rates)):
            mean, ci = _mean_ci(values)
            setattr(report, name, mean)
            report.confidence_intervals[name] = ci

    if flights:
        report.mean_ground_delay = math.fsum(f.ground_delay for f in flights) / len(flights)
        report.mean_airborne_delay = math.fsum(f.airborne_delay for f in flights) / len(flights)
        report.mean_alerts_per_flight = sum(f.alerts for f in flights) / len(flights)
    report.truncated_runs = sum(1 for log in logs if log.truncated)
    if baseline is not None:
        report.risk_ratio = risk_ratio(report, baseline)
    return report


def capacity_sweep(
    config: ScenarioConfig,
    tactical: TacticalMode,
    capacities: Sequence[int],
    runs: int,
    params: RiskModelParams,
    base_seed: int = 0,
    workers: int = 1,
    policy: Optional[PolicyTable] = None,
    tls: float = TARGET_LEVEL_OF_SAFETY,
) -> SweepResult:
    """
    Monte Carlo per capacity (same value on every resource), exact DCB preconditioning

    The reported maximum is the largest capacity of the contiguous run of compliant
    rows starting from the smallest capacity (mean estimate against the TLS).
    """
    if any(c < 1 for c in capacities):
        raise ValueError("capacities must be >= 1")
    result = SweepResult(tactical_mode=tactical.value, tls=tls)
    for capacity in sorted(capacities):
        logs = monte_carlo(config.with_capacity(capacity), StrategicMode.EXACT, tactical, runs, base_seed, workers, policy)
        report = aggregate(logs, params)
        ci_high = report.confidence_intervals.get("est_mac_per_100k_fh", (0.0, report.est_mac_per_100k_fh))[1]
        row = SweepRow(
            capacity=capacity,
            est_mac_per_100k_fh=report.est_mac_per_100k_fh,
            ci_high=ci_high,
            nmac_per_fh=report.nmac_per_fh,
            lowc_per_fh=report.lowc_per_fh,
            mean_ground_delay=report.mean_ground_delay,
            tls_compliant=report.est_mac_per_100k_fh <= tls,
            tls_compliant_upper=ci_high <= tls,
        )
        result.rows.append(row)
        logger.info(f"ℹ️ sweep C={capacity}: est MAC {row.est_mac_per_100k_fh:.4f}/100k fh")

    for row in result.rows:
        if not row.tls_compliant:
            break
        result.max_compliant_capacity = row.capacity
    return result


def select_capacity(
    config: ScenarioConfig,
    tactical: TacticalMode,
    capacities: Sequence[int],
    runs: int,
    params: RiskModelParams,
    base_seed: int = 0,
    workers: int = 1,
    policy: Optional[PolicyTable] = None,
) -> int:
    """
    Largest capacity whose estimated-MAC 95% upper bound stays within the TLS for one tactical mode

    Falls back to the smallest swept capacity when none qualifies.
    """
    result = capacity_sweep(config, tactical, capacities, runs, params, base_seed, workers, policy)
    chosen = result.max_upper_compliant_capacity()
    if chosen is None:
        chosen = min(capacities)
        logger.warning(f"⚠️ no swept capacity meets the TLS with {tactical.value} tactics, using C={chosen}")
    else:
        logger.info(f"ℹ️ selected C={chosen} for {tactical.value} tactics")
    return chosen


def compare_methods(
    config: ScenarioConfig,
    runs: int,
    params: RiskModelParams,
    base_seed: int = 0,
    workers: int = 1,
    rule_capacity: Optional[int] = None,
    policy: Optional[PolicyTable] = None,
    policy_capacity: Optional[int] = None,
    capacities: Sequence[int] = DEFAULT_SWEEP_CAPACITIES,
) -> List[MethodRow]:
    """
    Method comparison at one demand level; risk ratios against the unmitigated row

    Rows: no intervention, DCB C=1, rule-based, rule-based + DCB, and the learned policy
    with and without DCB when a policy is supplied. A DCB capacity left as None is the
    one select_capacity picks for that tactical mode over the given capacities.
    """
    if rule_capacity is None:
        rule_capacity = select_capacity(config, TacticalMode.RULE, capacities, runs, params, base_seed, workers)
    if policy is not None and policy_capacity is None:
        policy_capacity = select_capacity(config, TacticalMode.POLICY, capacities, runs, params, base_seed, workers, policy)

    plan = [
        ("No intervention", StrategicMode.NONE, TacticalMode.NONE, None),
        ("DCB", StrategicMode.EXACT, TacticalMode.NONE, 1),
        ("Rule-based", StrategicMode.NONE, TacticalMode.RULE, None),
        ("Rule-based + DCB", StrategicMode.EXACT, TacticalMode.RULE, rule_capacity),
    ]
    if policy is not None:
        plan += [
            ("Learned policy", StrategicMode.NONE, TacticalMode.POLICY, None),
            ("Learned policy + DCB", StrategicMode.EXACT, TacticalMode.POLICY, policy_capacity),
        ]

    rows: List[MethodRow] = []
    baseline: Optional[MetricsReport] = None
    for label, strategic, tactical, capacity in plan:
        scenario = config.with_capacity(capacity) if capacity is not None else config
        logs = monte_carlo(scenario, strategic, tactical, runs, base_seed, workers, policy)
        report = aggregate(logs, params, baseline=baseline)
        if baseline is None:
            baseline = report
            report.risk_ratio = risk_ratio(report, report)
        name = f"{label} (C={capacity})" if capacity is not None else label
        rows.append(MethodRow(name, strategic.value, tactical.value, capacity, report))
    return rows


# ---------- text tables ----------

COMPARISON_HEADER = ["Method", "LoWC/FH", "NMAC/FH", "Est. MAC/100k FH", "Risk ratio",
                     "Ground delay (s)", "Airborne delay (s)", "Alerts/flight"]


def _align(rows: List[List[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for k, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i]) for i, cell in enumerate(row)))
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def format_comparison_table(rows: Sequence[MethodRow]) -> str:
    return _align([COMPARISON_HEADER] + [[r.label] + r.report.to_table_row() for r in rows])


def format_sweep_table(result: SweepResult) -> str:
    header = ["Capacity"] + [str(r.capacity) for r in result.rows]
    est = ["Est. MAC/100k FH"] + [f"{r.est_mac_per_100k_fh:.4f}" for r in result.rows]
    upper = ["95% CI upper"] + [f"{r.ci_high:.4f}" for r in result.rows]
    flags = [f"TLS <= {result.tls}"] + ["yes" if r.tls_compliant else "no" for r in result.rows]
    table = _align([header, est, upper, flags])
    return (table + f"max compliant capacity ({result.tactical_mode}): {result.max_compliant_capacity}\n"
            + f"max compliant capacity, CI upper bound ({result.tactical_mode}): {result.max_upper_compliant_capacity()}\n")
