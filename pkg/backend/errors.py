#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Exception hierarchy for the conflict management platform"""

from typing import Any, Dict, List, Optional


class ConflictPlatformError(Exception):
    """Base class for all platform errors"""

    exit_code = 1

    def to_dict(self) -> Dict[str, Any]:
        """Structured form used by the CLI error channel"""
        return {"error": type(self).__name__, "message": str(self)}


class ScenarioValidationError(ConflictPlatformError):
    """Scenario document failed schema or invariant checks"""

    exit_code = 2

    def __init__(self, message: str, violations: Optional[List[Dict[str, str]]] = None):
        super().__init__(message)
        self.violations = violations or []

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload["violations"] = self.violations
        return payload


class RouteNodeError(ConflictPlatformError):
    """A node was requested that is not on the given route (or in the wrong order)"""

    def __init__(self, route_id: str, node_id: str, detail: str = "not on route"):
        super().__init__(f"node '{node_id}' {detail} '{route_id}'")
        self.route_id = route_id
        self.node_id = node_id


class InstanceTooLargeError(ConflictPlatformError):
    """The brute-force oracle refuses instances beyond its limits"""


class TrainingDivergenceError(ConflictPlatformError):
    """Action values became non-finite during training"""

    def __init__(self, episode: int, diagnostics: Dict[str, Any]):
        super().__init__(f"non-finite action values after episode {episode}")
        self.episode = episode
        self.diagnostics = diagnostics

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload["episode"] = self.episode
        payload["diagnostics"] = self.diagnostics
        return payload


class ExperimentConfigError(ConflictPlatformError):
    """Experiment flags or config file are inconsistent"""

    exit_code = 2


class DCBInfeasibleError(ConflictPlatformError):
    """No balanced schedule exists within the horizon"""

    def __init__(self, binding_resource: Optional[str]):
        super().__init__(f"demand capacity balancing infeasible within horizon (binding resource: {binding_resource})")
        self.binding_resource = binding_resource

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload["binding_resource"] = self.binding_resource
        return payload
