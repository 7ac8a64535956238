"""Scenario schema, loader and settings"""
from .scenario_loader import ScenarioConfig, ScenarioLoader

__all__ = ["ScenarioConfig", "ScenarioLoader"]
