#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Metric tests: estimated MACs, calibration, risk ratio, aggregation, capacity sweep
"""

import random

import numpy as np
import pytest
from scipy import stats

from conftest import make_log
from models.metrics import TARGET_LEVEL_OF_SAFETY, MethodRow, MetricsReport, RiskModelParams, SweepResult, SweepRow
from models.simulation import TacticalMode
from services.metrics_service import (
    aggregate,
    calibrate_p_mac_given_nmac,
    capacity_sweep,
    compare_methods,
    estimate_mac,
    format_comparison_table,
    format_sweep_table,
    risk_ratio,
    select_capacity,
)

PUBLISHED = RiskModelParams()


# ---------- estimate_mac ----------

def test_no_nmac_no_mac():
    assert estimate_mac(0, 10.0, PUBLISHED).expected_macs == 0.0


def test_estimate_mac_chain():
    estimate = estimate_mac(4, 10.0, PUBLISHED)
    assert estimate.expected_macs == pytest.approx(1.0076e-4)
    assert estimate.rate_per_100k_fh == pytest.approx(1.0076)


def test_estimate_mac_without_collision_avoidance():
    assert estimate_mac(1000, 1.0, RiskModelParams(acasx_risk_ratio=1.0)).expected_macs == pytest.approx(5.038)


def test_estimate_mac_needs_flight_hours():
    with pytest.raises(ValueError):
        estimate_mac(1, 0.0, PUBLISHED)


# ---------- calibration ----------

def test_calibration_ratio():
    zero = calibrate_p_mac_given_nmac([make_log(nmac=100)])
    assert zero.p_mac_given_nmac == 0.0 and zero.ci_low == 0.0
    one = calibrate_p_mac_given_nmac([make_log(nmac=120, mac=1), make_log(nmac=80)])
    assert one.p_mac_given_nmac == pytest.approx(0.005)
    assert one.n_nmac == 200 and one.n_mac == 1
    assert one.ci_low < 0.005 < one.ci_high


def test_calibration_interval_is_clopper_pearson():
    result = calibrate_p_mac_given_nmac([make_log(nmac=50, mac=5)])
    assert result.ci_low == pytest.approx(stats.beta.ppf(0.025, 5, 46))
    assert result.ci_high == pytest.approx(stats.beta.ppf(0.975, 6, 45))


def test_calibration_undefined_without_nmac():
    result = calibrate_p_mac_given_nmac([make_log(lowc=3)])
    assert not result.defined
    assert result.p_mac_given_nmac is None


# ---------- risk ratio ----------

def test_risk_ratio_examples():
    assert risk_ratio(908.25, 205.53) == pytest.approx(4.419, abs=1e-3)
    assert risk_ratio(205.53, 205.53) == 1.0
    assert risk_ratio(0.0, 205.53) == 0.0
    assert risk_ratio(3.0, 0.0) is None


def test_risk_ratio_accepts_reports():
    method = MetricsReport(est_mac_per_100k_fh=2.0)
    baseline = MetricsReport(est_mac_per_100k_fh=4.0)
    assert risk_ratio(method, baseline) == 0.5


# ---------- aggregate ----------

def test_empty_traffic_log_gives_zero_report():
    report = aggregate([make_log()], PUBLISHED)
    assert report.lowc_per_fh == 0.0 and report.nmac_per_fh == 0.0 and report.est_mac_per_100k_fh == 0.0
    assert report.mean_ground_delay == 0.0 and report.mean_alerts_per_flight == 0.0
    assert report.run_count == 1


def test_duplicated_log_has_zero_width_interval():
    log = make_log(nmac=3, lowc=7, flight_seconds=(1800.0, 1800.0), ground_delay=12.0, alerts=2)
    single = aggregate([log], PUBLISHED)
    many = aggregate([log] * 30, PUBLISHED)
    assert many.nmac_per_fh == pytest.approx(single.nmac_per_fh)
    assert many.lowc_per_fh == pytest.approx(7.0)
    assert many.est_mac_per_100k_fh == pytest.approx(estimate_mac(3, 1.0, PUBLISHED).rate_per_100k_fh)
    low, high = many.confidence_intervals["nmac_per_fh"]
    assert low == high == many.nmac_per_fh
    assert many.mean_ground_delay == 12.0
    assert many.mean_alerts_per_flight == 2.0


def test_aggregate_is_order_independent():
    rng = random.Random(7)
    logs = [
        make_log(seed=i, nmac=rng.randint(0, 5), lowc=rng.randint(0, 20),
                 flight_seconds=[rng.uniform(300.0, 900.0) for _ in range(rng.randint(1, 6))],
                 ground_delay=rng.uniform(0.0, 60.0), alerts=rng.randint(0, 4))
        for i in range(25)
    ]
    shuffled = list(logs)
    rng.shuffle(shuffled)
    assert aggregate(logs, PUBLISHED).to_dict() == aggregate(shuffled, PUBLISHED).to_dict()


def test_rates_are_averaged_per_run():
    short = make_log(nmac=1, flight_seconds=(3600.0,))
    long = make_log(nmac=1, flight_seconds=(3600.0 * 3,))
    per_run = aggregate([short, long], PUBLISHED)
    pooled = aggregate([short, long], PUBLISHED, pooled=True)
    assert per_run.nmac_per_fh == pytest.approx((1.0 + 1.0 / 3.0) / 2.0)
    assert pooled.nmac_per_fh == pytest.approx(2.0 / 4.0)


def test_aggregate_fills_risk_ratio():
    baseline = aggregate([make_log(nmac=4, flight_seconds=(3600.0,))], PUBLISHED)
    method = aggregate([make_log(nmac=2, flight_seconds=(3600.0,))], PUBLISHED, baseline=baseline)
    assert method.risk_ratio == pytest.approx(0.5)


def test_aggregate_needs_logs():
    with pytest.raises(ValueError):
        aggregate([], PUBLISHED)


# ---------- tables ----------

def test_comparison_table_layout():
    rows = [
        MethodRow("No intervention", "none", "none", None, MetricsReport(lowc_per_fh=467.0, risk_ratio=1.0)),
        MethodRow("DCB (C=1)", "exact", "none", 1, MetricsReport(risk_ratio=0.0)),
    ]
    lines = format_comparison_table(rows).splitlines()
    assert lines[0].startswith("Method")
    assert set(lines[1]) <= {"-", " "}
    assert "467.00" in lines[2] and "1.0000" in lines[2]
    assert lines[3].startswith("DCB (C=1)")


def test_sweep_table_reports_max_capacity():
    result = SweepResult(tactical_mode="rule", max_compliant_capacity=2, rows=[
        SweepRow(1, 0.0, 0.0, 0.0, 0.0, 100.0, True, True),
        SweepRow(2, 0.5, 1.2, 0.1, 1.0, 50.0, True, False),
    ])
    text = format_sweep_table(result)
    assert "max compliant capacity (rule): 2" in text
    assert "max compliant capacity, CI upper bound (rule): 1" in text
    assert "yes" in text


# ---------- TLS compliance and capacity selection ----------

def _sweep(tactical, flags):
    """flags: (mean compliant, upper compliant) per capacity 1..n"""
    rows = [SweepRow(c, 0.5, 1.0, 0.0, 0.0, 10.0 / c, mean, upper) for c, (mean, upper) in enumerate(flags, start=1)]
    return SweepResult(tactical_mode=tactical.value, rows=rows)


def test_upper_bound_compliance_is_stricter_than_mean():
    result = _sweep(TacticalMode.RULE, [(True, True), (True, True), (True, False), (False, False)])
    result.max_compliant_capacity = 3
    assert result.max_upper_compliant_capacity() == 2
    assert _sweep(TacticalMode.RULE, [(True, False), (True, True)]).max_upper_compliant_capacity() is None


def test_sweep_flags_compliance_by_interval_upper_bound(monkeypatch, merge_config):
    # three of ten runs carry NMACs: the mean passes while the upper bound does not
    logs = [make_log(seed=i, nmac=3 if i < 3 else 0, flight_seconds=(3600.0,)) for i in range(10)]
    monkeypatch.setattr("services.metrics_service.monte_carlo", lambda *args, **kwargs: logs)
    params = RiskModelParams(p_mac_given_nmac=1.0, acasx_risk_ratio=1.0e-5)
    row = capacity_sweep(merge_config, TacticalMode.NONE, [1], runs=10, params=params).rows[0]
    assert row.est_mac_per_100k_fh == pytest.approx(0.9)
    assert row.ci_high > TARGET_LEVEL_OF_SAFETY
    assert row.tls_compliant and not row.tls_compliant_upper


def test_select_capacity_falls_back_to_smallest(monkeypatch, merge_config):
    monkeypatch.setattr("services.metrics_service.capacity_sweep",
                        lambda *args, **kwargs: _sweep(TacticalMode.RULE, [(False, False), (False, False)]))
    assert select_capacity(merge_config, TacticalMode.RULE, [2, 3], runs=1, params=PUBLISHED) == 2


def test_compare_methods_takes_rule_capacity_from_sweep(monkeypatch, merge_config):
    swept = []

    def fake_sweep(config, tactical, capacities, *args):
        swept.append((tactical, tuple(capacities)))
        return _sweep(tactical, [(True, True), (True, True), (True, False)])

    monkeypatch.setattr("services.metrics_service.capacity_sweep", fake_sweep)
    rows = compare_methods(merge_config, runs=1, params=PUBLISHED, capacities=[1, 2, 3])
    assert swept == [(TacticalMode.RULE, (1, 2, 3))]
    assert [r.label for r in rows] == ["No intervention", "DCB (C=1)", "Rule-based", "Rule-based + DCB (C=2)"]
    assert [(r.strategic_mode, r.tactical_mode) for r in rows] == [
        ("none", "none"), ("exact", "none"), ("none", "rule"), ("exact", "rule"),
    ]
    assert rows[1].report.mean_ground_delay >= rows[0].report.mean_ground_delay


def test_compare_methods_capacity_flag_skips_sweep(monkeypatch, merge_config):
    def no_sweep(*args, **kwargs):
        raise AssertionError("capacity was given, no sweep expected")

    monkeypatch.setattr("services.metrics_service.capacity_sweep", no_sweep)
    rows = compare_methods(merge_config, runs=1, params=PUBLISHED, rule_capacity=1)
    assert rows[-1].label == "Rule-based + DCB (C=1)"
    assert rows[-1].capacity == 1


# ---------- capacity sweep (long) ----------

@pytest.mark.slow
def test_capacity_one_is_compliant(default_config):
    result = capacity_sweep(default_config, TacticalMode.NONE, [1], runs=5, params=PUBLISHED)
    assert result.rows[0].est_mac_per_100k_fh == 0.0
    assert result.rows[0].tls_compliant
    assert result.max_compliant_capacity == 1


@pytest.mark.slow
def test_estimated_macs_grow_with_capacity(default_config):
    result = capacity_sweep(default_config, TacticalMode.RULE, list(range(1, 9)), runs=20, params=PUBLISHED)
    rates = [r.est_mac_per_100k_fh for r in result.rows]
    rho = stats.spearmanr(np.arange(1, 9), rates)[0]
    assert rho >= 0.7


@pytest.mark.slow
def test_ground_delay_grows_as_capacity_tightens(default_config):
    result = capacity_sweep(default_config, TacticalMode.NONE, [1, 2, 4, 7], runs=3, params=PUBLISHED)
    delays = [r.mean_ground_delay for r in result.rows]
    assert all(tight >= loose - 1e-6 for tight, loose in zip(delays, delays[1:]))
    assert delays[0] > delays[-1]


@pytest.mark.slow
def test_method_ordering_on_default_scenario(default_config):
    rows = compare_methods(default_config, runs=20, params=PUBLISHED, capacities=list(range(1, 9)))
    by_label = {r.label.split(" (C=")[0]: r for r in rows}
    assert by_label["No intervention"].report.risk_ratio == 1.0
    assert by_label["Rule-based"].report.risk_ratio > 1.0
    for label in ("DCB", "Rule-based + DCB"):
        _low, high = by_label[label].report.confidence_intervals["est_mac_per_100k_fh"]
        assert high <= TARGET_LEVEL_OF_SAFETY
    assert by_label["DCB"].report.mean_ground_delay >= by_label["Rule-based + DCB"].report.mean_ground_delay
