from src.config.constants import DEFAULTS, TOOL_NAME, TOOL_VERSION
from src.config.loader import load_config, numerics, output, settings, simulation

__all__ = ["DEFAULTS", "TOOL_NAME", "TOOL_VERSION", "load_config", "settings", "numerics", "simulation", "output"]
