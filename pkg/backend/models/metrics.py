#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Safety / efficiency metric data models"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

PUBLISHED_P_MAC_GIVEN_NMAC = 5.038e-3
TARGET_LEVEL_OF_SAFETY = 0.94  # estimated MACs per 100,000 flight hours


@dataclass(frozen=True)
class RiskModelParams:
    p_mac_given_nmac: float = PUBLISHED_P_MAC_GIVEN_NMAC
    acasx_risk_ratio: float = 0.005  # beta


@dataclass(frozen=True)
class MacEstimate:
    expected_macs: float
    rate_per_100k_fh: float


@dataclass(frozen=True)
class CalibrationResult:
    p_mac_given_nmac: Optional[float]  # None when no NMAC was observed
    n_mac: int
    n_nmac: int
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None

    @property
    def defined(self) -> bool:
        return self.p_mac_given_nmac is not None


@dataclass
class MetricsReport:
    """Per-run rates averaged over runs, efficiency averaged per flight"""
    lowc_per_fh: float = 0.0
    nmac_per_fh: float = 0.0
    est_mac_per_100k_fh: float = 0.0
    risk_ratio: Optional[float] = None
    mean_ground_delay: float = 0.0
    mean_airborne_delay: float = 0.0
    mean_alerts_per_flight: float = 0.0
    run_count: int = 0
    flight_hours: float = 0.0
    confidence_intervals: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    truncated_runs: int = 0

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["confidence_intervals"] = {k: list(v) for k, v in self.confidence_intervals.items()}
        return data

    def to_table_row(self) -> List[str]:
        """Cells in comparison-table column order (label excluded)"""
        ratio = "n/a" if self.risk_ratio is None else f"{self.risk_ratio:.4f}"
        return [
            f"{self.lowc_per_fh:.2f}",
            f"{self.nmac_per_fh:.2f}",
            f"{self.est_mac_per_100k_fh:.4f}",
            ratio,
            f"{self.mean_ground_delay:.2f}",
            f"{self.mean_airborne_delay:.2f}",
            f"{self.mean_alerts_per_flight:.2f}",
        ]


@dataclass(frozen=True)
class SweepRow:
    capacity: int
    est_mac_per_100k_fh: float
    ci_high: float
    nmac_per_fh: float
    lowc_per_fh: float
    mean_ground_delay: float
    tls_compliant: bool
    tls_compliant_upper: bool


@dataclass
class SweepResult:
    tactical_mode: str
    rows: List[SweepRow] = field(default_factory=list)
    max_compliant_capacity: Optional[int] = None
    tls: float = TARGET_LEVEL_OF_SAFETY

    def max_upper_compliant_capacity(self) -> Optional[int]:
        """Largest capacity of the contiguous prefix whose 95% CI upper bound meets the TLS"""
        best = None
        for row in self.rows:
            if not row.tls_compliant_upper:
                break
            best = row.capacity
        return best


@dataclass(frozen=True)
class MethodRow:
    """One labelled line of a method comparison"""
    label: str
    strategic_mode: str
    tactical_mode: str
    capacity: Optional[int]
    report: MetricsReport
