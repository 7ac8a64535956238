"""Data models"""
from .airspace import AircraftPerformance, AirspaceNetwork, DemandSpec, FlightPlan, Route
from .dcb import DCBConfig, DCBSolution, ValidationReport
from .simulation import EpisodeLog, StrategicMode, TacticalMode
from .tactical import DetectionMode, ObservationVector, SpeedAction
from .metrics import MetricsReport, RiskModelParams

__all__ = [
    "AircraftPerformance",
    "AirspaceNetwork",
    "DemandSpec",
    "FlightPlan",
    "Route",
    "DCBConfig",
    "DCBSolution",
    "ValidationReport",
    "EpisodeLog",
    "StrategicMode",
    "TacticalMode",
    "DetectionMode",
    "ObservationVector",
    "SpeedAction",
    "MetricsReport",
    "RiskModelParams",
]
