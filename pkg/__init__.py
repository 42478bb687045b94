"""
gridcon: curative congestion management test system

Replays a low-voltage grid scenario with a simulated set of assets (battery,
PV inverter, EV charging station, tap changer) behind a register bus, and
compares a controller that estimates the grid state and redispatches the
assets against an uncontrolled reference run.
"""

__version__ = "0.1.0"

# Core imports
from core.pipeline import ExperimentPipeline
from core.runner import ScenarioRunner
from core.simulator import GridSimulator

# Expose key functionality
from config import Settings, load_settings
from scenarios import get_scenario, list_available_scenarios, load_scenario
from evaluators import compute_metrics, violation_series
from control import Controller, decide, quantize_ev
from visualization.report import render_register_map

# Make key classes available at package level
from network.base import Network
from scenarios.base import Scenario
from evaluators.metrics import MetricsReport
from core.trace import RunTrace
