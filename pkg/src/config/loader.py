"""
src/config/loader.py

Central source of truth for numerical configuration.
Loads config.yaml when present, otherwise falls back to src.config.constants.DEFAULTS.
"""

import copy
import os
from functools import lru_cache
from typing import Any, Dict, Optional

import yaml

from src.config.constants import DEFAULTS
from src.logger import get_logger

logger = get_logger("config.loader")

CONFIG_PATH = os.getenv("SUPERRES_CONFIG", os.path.join(os.getcwd(), "config.yaml"))


# -------------------------------------------------
# Merge helpers
# -------------------------------------------------
def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if key not in out:
            logger.warning("Ignoring unknown config key '%s'", key)
            continue
        if isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


# -------------------------------------------------
# Load config.yaml (or fallback)
# -------------------------------------------------
def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    """
    Returns dict:
      {
         "numerics":   {"quad_abs_tol": 1e-10, "max_index": 20, ...},
         "simulation": {"seed": ..., "mle_grid_points": 2001, ...},
         "output":     {"dir": "data/results", ...}
      }
    """
    path = path or CONFIG_PATH
    if os.path.exists(path):
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
            if not isinstance(data, dict):
                raise ValueError("top-level YAML node must be a mapping")
            cfg = _merge(DEFAULTS, data)
            logger.debug("Loaded configuration from %s", path)
            return cfg
        except Exception as e:
            logger.error("Failed reading %s: %s", path, e)

    logger.debug("Using DEFAULTS fallback (config.yaml missing or invalid).")
    return copy.deepcopy(DEFAULTS)


@lru_cache(maxsize=1)
def settings() -> Dict[str, Any]:
    """Process-wide cached configuration."""
    return load_config()


def numerics(key: str) -> Any:
    return settings()["numerics"][key]


def simulation(key: str) -> Any:
    return settings()["simulation"][key]


def output(key: str) -> Any:
    return settings()["output"][key]
