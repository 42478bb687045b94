"""
Scenario definition files.

Schema (JSON, paths relative to the scenario file)::

    {
      "name": "sgtl",
      "network": "network.json",
      "period_s": 15, "t0": "00:00:00", "t_end": "00:11:00",
      "rts": {"id": "RTS", "irradiance": "irradiance.csv", "temperature": "temperature.csv"},
      "assets": [
        {"id": "OLTC", "kind": "oltc", "branch": "T1"},
        {"id": "PV", "kind": "pv", "bus": "PV", "p_ref": 60,
         "inverter_efficiency": {"eta_5": 0.89, ...}},
        {"id": "R1", "kind": "load", "bus": "B008", "series": "load.csv", "interpolation": "previous"}
      ],
      "meters": [{"id": "M_B007", "bus": "B007", "measures": ["voltage", "injection"]}],
      "limits": {"voltage_band": [0.9, 1.1],
                 "branches": {"T1": [["00:00:00", "00:03:45", 70], ...]}},
      "events": [{"time": "00:05:45", "asset": "CS", "set": "connected", "value": true}],
      "endpoints": {"PV": "127.0.0.1:5021/1"}
    }

An interval end of ``null`` means open-ended. Every error names the file and
the offending field.
"""
from pathlib import Path
from typing import Any, Dict, List, Tuple
import logging
import math

from assets import get_asset
from assets.oltc import OLTCModel
from assets.pv import european_efficiency
from core.errors import ConfigError, GridconError
from core.utils import PathLike, load_json_file, parse_clock
from network.loader import load_network
from .base import LINEAR, Event, LimitInterval, LimitSchedule, MeterSpec, Scenario, Series

logger = logging.getLogger(__name__)

_ASSET_META = ("id", "kind", "bus", "branch", "series", "interpolation", "inverter_efficiency")


def _require(entry: Dict[str, Any], key: str, source: str, where: str) -> Any:
    if not isinstance(entry, dict) or key not in entry:
        raise ConfigError(f"missing field {key!r}", source=source, field=where)
    return entry[key]


def _clock(value: Any, source: str, where: str) -> float:
    try:
        return parse_clock(value)
    except (TypeError, ValueError):
        raise ConfigError(f"not a time: {value!r}", source=source, field=where)


def parse_endpoint_spec(value: str, source: str = "<endpoint>", where: str = "endpoints") -> Tuple[str, int, int]:
    """``host:port/unit`` -> (host, port, unit); the unit defaults to 1."""
    address, _, unit = str(value).partition("/")
    host, _, port = address.rpartition(":")
    if not host or not port.isdigit() or (unit and not unit.isdigit()):
        raise ConfigError(f"endpoint must be host:port[/unit], got {value!r}", source=source, field=where)
    return host, int(port), int(unit or 1)


def _series(base: Path, ref: Any, name: str, interpolation: str, source: str, where: str) -> Series:
    if isinstance(ref, (int, float)):
        return Series.constant(name, float(ref))
    return Series.from_csv(str(base / str(ref)), name=name, interpolation=interpolation)


def _asset(entry: Dict[str, Any], network, source: str, where: str):
    asset_id = str(_require(entry, "id", source, where))
    kind = str(_require(entry, "kind", source, where))
    if kind == "oltc":
        branch_id = str(_require(entry, "branch", source, where))
        if not network.has_branch(branch_id):
            raise ConfigError(f"unknown branch {branch_id!r}", source=source, field=f"{where}.branch")
        return OLTCModel.from_branch(asset_id, network.branch(branch_id))
    params = {k: v for k, v in entry.items() if k not in _ASSET_META}
    if kind == "pv" and "inverter_efficiency" in entry:
        try:
            params["eta_inverter"] = european_efficiency(**entry["inverter_efficiency"])
        except TypeError as e:
            raise ConfigError(str(e), source=source, field=f"{where}.inverter_efficiency")
    try:
        return get_asset(kind, asset_id=asset_id, bus=str(_require(entry, "bus", source, where)), **params)
    except ConfigError as e:
        raise ConfigError(e.message, source=source, field=where)
    except GridconError as e:
        raise ConfigError(str(e), source=source, field=where)


def _schedule(data: Dict[str, Any], source: str) -> LimitSchedule:
    branches = {}
    for branch_id, rows in data.get("branches", {}).items():
        intervals: List[LimitInterval] = []
        for i, row in enumerate(rows):
            where = f"limits.branches.{branch_id}[{i}]"
            if not isinstance(row, (list, tuple)) or len(row) != 3:
                raise ConfigError("expected [start, end, s_max_kva]", source=source, field=where)
            start = _clock(row[0], source, where)
            end = math.inf if row[1] is None else _clock(row[1], source, where)
            try:
                intervals.append(LimitInterval(start, end, float(row[2])))
            except (TypeError, ValueError):
                raise ConfigError(f"not a number: {row[2]!r}", source=source, field=where)
            except ConfigError as e:
                raise ConfigError(e.message, source=source, field=where)
        branches[branch_id] = tuple(intervals)
    try:
        return LimitSchedule(branch_limits=branches,
                             voltage_band=tuple(data.get("voltage_band", (0.9, 1.1))),
                             bus_bands={k: tuple(v) for k, v in data.get("bus_bands", {}).items()})
    except ConfigError as e:
        raise ConfigError(e.message, source=source, field=f"limits.{e.field}")


def scenario_from_dict(data: Dict[str, Any], base_dir: PathLike = ".", source: str = "<dict>") -> Scenario:
    """
    Build a Scenario from its JSON representation.

    Args:
        data: Parsed scenario document
        base_dir: Directory that relative file references resolve against
        source: Name used in error messages

    Raises:
        ConfigError: On missing or invalid fields
    """
    base = Path(base_dir)
    network = load_network(str(base / str(_require(data, "network", source, "network"))))

    assets: Dict[str, Any] = {}
    loads: Dict[str, Series] = {}
    for i, entry in enumerate(_require(data, "assets", source, "assets")):
        where = f"assets[{i}]"
        asset = _asset(entry, network, source, where)
        if asset.asset_id in assets:
            raise ConfigError(f"duplicate asset id {asset.asset_id!r}", source=source, field=where)
        assets[asset.asset_id] = asset
        if asset.kind == "load":
            loads[asset.asset_id] = _series(base, _require(entry, "series", source, where), asset.asset_id,
                                            entry.get("interpolation", LINEAR), source, f"{where}.series")

    rts = _require(data, "rts", source, "rts")
    irradiance = _series(base, _require(rts, "irradiance", source, "rts"), "irradiance",
                         rts.get("interpolation", LINEAR), source, "rts.irradiance")
    temperature = _series(base, _require(rts, "temperature", source, "rts"), "temperature",
                          rts.get("interpolation", LINEAR), source, "rts.temperature")

    meters = []
    for i, entry in enumerate(data.get("meters", [])):
        where = f"meters[{i}]"
        try:
            meters.append(MeterSpec(meter_id=str(_require(entry, "id", source, where)),
                                    bus=entry.get("bus"), branch=entry.get("branch"),
                                    measures=tuple(entry.get("measures", ("flow",) if "branch" in entry
                                                             else ("voltage", "injection")))))
        except ConfigError as e:
            raise ConfigError(e.message, source=source, field=where)

    events = []
    for i, entry in enumerate(data.get("events", [])):
        where = f"events[{i}]"
        events.append(Event(time=_clock(_require(entry, "time", source, where), source, f"{where}.time"),
                            asset_id=str(_require(entry, "asset", source, where)),
                            attribute=str(_require(entry, "set", source, where)),
                            value=_require(entry, "value", source, where)))

    endpoints = {asset_id: parse_endpoint_spec(value, source, f"endpoints.{asset_id}")
                 for asset_id, value in data.get("endpoints", {}).items()}

    try:
        period = float(data.get("period_s", 15.0))
    except (TypeError, ValueError):
        raise ConfigError(f"not a number: {data.get('period_s')!r}", source=source, field="period_s")

    return Scenario(
        name=str(data.get("name", base.name)),
        network=network,
        assets=assets,
        meters=tuple(meters),
        irradiance=irradiance,
        temperature=temperature,
        loads=loads,
        schedule=_schedule(data.get("limits", {}), source),
        events=tuple(events),
        period=period,
        t0=_clock(data.get("t0", 0.0), source, "t0"),
        t_end=_clock(_require(data, "t_end", source, "t_end"), source, "t_end"),
        rts_id=str(rts.get("id", "RTS")),
        endpoints=endpoints,
        source=source,
    )


def load_scenario(path: PathLike) -> Scenario:
    """
    Load a scenario file; referenced files resolve relative to it.

    Raises:
        ConfigError: If the file or a referenced file is missing or invalid
    """
    path = Path(path)
    try:
        data = load_json_file(path)
    except FileNotFoundError:
        raise ConfigError("scenario file not found", source=str(path))
    except ValueError as e:
        raise ConfigError(f"invalid JSON: {e}", source=str(path))
    return scenario_from_dict(data, base_dir=path.parent, source=str(path))
