#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Self-describing policy file (JSON): discretisation, hyperparameters, values, visit counts"""

import json
import logging
from pathlib import Path
from typing import Union

import numpy as np

from errors import ExperimentConfigError
from models.tactical import DetectionMode
from services.policy_learner import FEATURES, PolicyTable

logger = logging.getLogger(__name__)

POLICY_FORMAT = "icmp-tabular-policy"
POLICY_VERSION = 1


def save_policy(policy: PolicyTable, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        "format": POLICY_FORMAT,
        "version": POLICY_VERSION,
        "detection_mode": policy.detection_mode.value,
        "discretization": {name: policy.edges[name].tolist() for name in FEATURES},
        "shape": list(policy.shape),
        "actions": ["decrease", "hold", "increase"],
        "hyperparameters": policy.hyperparameters,
        "values": policy.values.tolist(),
        "visits": policy.visits.tolist(),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, sort_keys=True)
        f.write("\n")
    logger.info(f"✅ policy saved: {path}")
    return path


def load_policy(path: Union[str, Path]) -> PolicyTable:
    """
    Read a policy file written by save_policy

    Raises:
        ExperimentConfigError: missing file, unknown format/version or inconsistent shape
    """
    path = Path(path)
    if not path.exists():
        raise ExperimentConfigError(f"policy file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        logger.error(f"❌ policy file is not valid JSON: {path} - {e}")
        raise ExperimentConfigError(f"malformed policy file: {path}") from e

    if document.get("format") != POLICY_FORMAT or document.get("version") != POLICY_VERSION:
        raise ExperimentConfigError(
            f"unsupported policy file {path}: format={document.get('format')} version={document.get('version')}"
        )
    values = np.asarray(document["values"], dtype=float)
    visits = np.asarray(document["visits"], dtype=np.int64)
    if list(values.shape) != document["shape"] or values.shape != visits.shape:
        raise ExperimentConfigError(f"policy file {path}: value table does not match declared shape")
    return PolicyTable(
        edges={name: np.asarray(document["discretization"][name], dtype=float) for name in FEATURES},
        values=values,
        visits=visits,
        detection_mode=DetectionMode(document["detection_mode"]),
        hyperparameters=dict(document.get("hyperparameters", {})),
    )
