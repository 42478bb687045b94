"""
Settings for gridcon experiments.

Defaults live in ``config/simulation.yaml``; callers may pass a different file
and a flat dictionary of dotted overrides (``{"optimization.tol_eq": 1e-7}``).
"""
from dataclasses import dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional

from core.errors import ConfigError
from core.utils import load_yaml_file

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent / "simulation.yaml"


@dataclass(frozen=True)
class PowerFlowSettings:
    tol: float = 1e-8
    max_iter: int = 30


@dataclass(frozen=True)
class VarianceSettings:
    voltage: float = 1e-6
    injection: float = 1e-5
    flow: float = 1e-5


@dataclass(frozen=True)
class EstimationSettings:
    tol: float = 1e-8
    max_iter: int = 25
    max_condition: float = 1e12
    variances: VarianceSettings = field(default_factory=VarianceSettings)
    noise_scale: float = 1.0


@dataclass(frozen=True)
class OptimizationSettings:
    tol_eq: float = 1e-6
    tol_ineq: float = 1e-4
    max_iter: int = 1000
    elastic_weight: float = 1e4


@dataclass(frozen=True)
class ControlSettings:
    idle_policy: str = "dispatch_targets"
    ev_nominal_voltage: float = 230.0


@dataclass(frozen=True)
class AssetSettings:
    bss_target_literal: bool = False
    bss_horizon_periods: int = 240
    bss_roundtrip_efficiency: float = 1.0
    pv_headroom: float = 1.1


@dataclass(frozen=True)
class TransportSettings:
    timeout_s: float = 0.5
    sync_timeout_s: float = 5.0
    host: str = "127.0.0.1"


@dataclass(frozen=True)
class Settings:
    seed: int = 42
    powerflow: PowerFlowSettings = field(default_factory=PowerFlowSettings)
    estimation: EstimationSettings = field(default_factory=EstimationSettings)
    optimization: OptimizationSettings = field(default_factory=OptimizationSettings)
    control: ControlSettings = field(default_factory=ControlSettings)
    assets: AssetSettings = field(default_factory=AssetSettings)
    transport: TransportSettings = field(default_factory=TransportSettings)


def _build(cls, data: Dict[str, Any], source: str, prefix: str = ""):
    """Recursively build a frozen settings dataclass from a nested mapping."""
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", source=source, field=prefix or "<root>")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", source=source, field=prefix or "<root>")

    kwargs = {}
    for name, value in data.items():
        f = known[name]
        default = getattr(cls(), name)
        path = f"{prefix}.{name}" if prefix else name
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, source, path)
        else:
            try:
                kwargs[name] = _convert(default, value)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"cannot convert {value!r}: {e}", source=source, field=path)
    return cls(**kwargs)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(current: Any, value: Any) -> Any:
    if isinstance(current, bool) and isinstance(value, str):
        word = value.strip().lower()
        if word not in _TRUE | _FALSE:
            raise ValueError(f"not a boolean: {value!r}")
        return word in _TRUE
    return type(current)(value)


def _override(settings: Any, dotted: str, value: Any, source: str) -> Any:
    head, _, rest = dotted.partition(".")
    if not hasattr(settings, head):
        raise ConfigError("unknown setting", source=source, field=dotted)
    current = getattr(settings, head)
    if rest:
        return replace(settings, **{head: _override(current, rest, value, source)})
    try:
        return replace(settings, **{head: _convert(current, value)})
    except (TypeError, ValueError) as e:
        raise ConfigError(f"cannot convert {value!r}: {e}", source=source, field=dotted)


def load_settings(path: Optional[str] = None,
                  overrides: Optional[Dict[str, Any]] = None) -> Settings:
    """
    Load settings from YAML and apply dotted overrides.

    Args:
        path: YAML file (defaults to config/simulation.yaml)
        overrides: Mapping of dotted keys to values; ``None`` values are skipped

    Returns:
        Frozen Settings instance

    Raises:
        ConfigError: On unknown keys or values of the wrong type
    """
    source = str(path or DEFAULT_CONFIG_PATH)
    try:
        raw = load_yaml_file(source)
    except FileNotFoundError:
        raise ConfigError("settings file not found", source=source)
    settings = _build(Settings, raw, source)
    for key, value in (overrides or {}).items():
        if value is not None:
            settings = _override(settings, key, value, "command line")
    return settings
