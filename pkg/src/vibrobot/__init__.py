"""Simulation and control of a three-legged vibration-driven stick-slip robot."""
from .params import ConfigError, RobotParams, SimConfig, load_config, parse_config

__version__ = "0.1.0"

__all__ = ["ConfigError", "RobotParams", "SimConfig", "load_config", "parse_config"]
