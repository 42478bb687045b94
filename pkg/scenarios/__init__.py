"""
Scenarios package for gridcon.
"""
from pathlib import Path
from typing import Any, Dict, Optional, Union
import logging

from core.errors import ConfigError
from .base import Event, LimitInterval, LimitSchedule, MeterSpec, Scenario, Series
from .loader import load_scenario, parse_endpoint_spec, scenario_from_dict

logger = logging.getLogger(__name__)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "data" / "scenarios"

# Dictionary of scenario name to scenario file
_SCENARIO_REGISTRY: Dict[str, Path] = {}


def register_scenario(name: str, path: Union[str, Path]) -> None:
    """
    Register a scenario file under a short name.

    Args:
        name: Unique scenario name
        path: Scenario JSON file
    """
    _SCENARIO_REGISTRY[name] = Path(path)


def discover_scenarios(directory: Path = SCENARIO_DIR) -> None:
    """Register every ``<name>/scenario.json`` below ``directory``."""
    if not directory.is_dir():
        return
    for scenario_file in sorted(directory.glob("*/scenario.json")):
        register_scenario(scenario_file.parent.name, scenario_file)


def get_scenario_path(name_or_path: Union[str, Path]) -> Path:
    """
    Resolve a registered name or a file path.

    Raises:
        ConfigError: If neither a registered name nor an existing file
    """
    if str(name_or_path) in _SCENARIO_REGISTRY:
        return _SCENARIO_REGISTRY[str(name_or_path)]
    path = Path(name_or_path)
    if path.is_dir():
        path = path / "scenario.json"
    if path.is_file():
        return path
    raise ConfigError(f"Unknown scenario: {name_or_path}. Available scenarios: {list(_SCENARIO_REGISTRY)}",
                      field="scenario")


def get_scenario(name_or_path: Union[str, Path]) -> Scenario:
    """Load a scenario by registered name or path."""
    return load_scenario(get_scenario_path(name_or_path))


def list_available_scenarios() -> Dict[str, Dict[str, Any]]:
    """
    List registered scenarios.

    Returns:
        Scenario name -> metadata (file, buses, assets, cycles); unreadable
        files are listed with their error
    """
    result: Dict[str, Dict[str, Any]] = {}
    for name, path in sorted(_SCENARIO_REGISTRY.items()):
        try:
            scenario = load_scenario(path)
        except ConfigError as e:
            result[name] = {"file": str(path), "error": str(e)}
            continue
        result[name] = {"file": str(path), "buses": scenario.network.n_bus,
                        "assets": sorted(scenario.assets), "cycles": len(scenario.steps)}
    return result


# Discover shipped scenarios when the module is imported
discover_scenarios()

__all__ = [
    'Scenario', 'Series', 'LimitSchedule', 'LimitInterval', 'Event', 'MeterSpec',
    'load_scenario', 'scenario_from_dict', 'parse_endpoint_spec',
    'register_scenario', 'discover_scenarios', 'get_scenario_path', 'get_scenario',
    'list_available_scenarios', 'SCENARIO_DIR',
]
