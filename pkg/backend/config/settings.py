#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Process-level settings read from the environment (.env supported)"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

ARTIFACT_VERSION = "1.0.0"

LOG_LEVEL = os.getenv("ICMP_LOG_LEVEL", "INFO").upper()

CONFIG_DIR = Path(__file__).parent
SCENARIO_DIR = Path(os.getenv("ICMP_SCENARIO_DIR", str(CONFIG_DIR / "scenarios")))
GAMES_DIR = CONFIG_DIR / "games"

# Average departure interval per route (seconds)
DEMAND_PRESETS = {"high": 30.0, "medium": 60.0, "low": 120.0}


def default_workers() -> int:
    """ICMP_WORKERS if set, otherwise the available parallelism"""
    env_value = os.getenv("ICMP_WORKERS")
    if env_value:
        try:
            return max(1, int(env_value))
        except ValueError:
            pass
    return os.cpu_count() or 1
