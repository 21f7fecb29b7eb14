"""Agent-based protest crowd vs. police simulation with weighted steering behaviors."""

from .engine import compare, run, run_batch
from .model import Scenario, SummaryReport, build_world, validate_scenario
from .scenario_io import dumps_scenario, loads_scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "Scenario", "SummaryReport", "build_world", "compare", "dumps_scenario", "loads_scenario",
    "parse_scenario", "run", "run_batch", "validate_scenario",
]
