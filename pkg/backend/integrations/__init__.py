"""Artifact and policy file I/O"""
from .artifact_store import ArtifactStore
from .policy_store import load_policy, save_policy

__all__ = ["ArtifactStore", "load_policy", "save_policy"]
