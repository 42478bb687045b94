"""
Network definition files.

Schema (JSON)::

    {
      "name": "sgtl",
      "s_base_kva": 100,
      "buses": [{"id": "MV", "base_kv": 10.0, "kind": "slack"}, ...],
      "branches": [
        {"id": "T1", "kind": "transformer", "from": "MV", "to": "B007",
         "rated_kva": 250, "uk_percent": 4.0, "ur_percent": 1.2,
         "tap": {"position": 5, "neutral": 5, "step": 0.025, "min": 4, "max": 9}},
        {"id": "L1", "kind": "cable", "from": "B008", "to": "B007",
         "cable": "NAYY 4x150 SE", "length_m": 400, "rating_kva": 170.4}
      ]
    }

Cable impedances are resolved from the catalog at load time; a cable may give
``r_ohm``/``x_ohm`` directly instead of ``cable``. Transformers may give
``r_ohm``/``x_ohm`` (referred to the LV side) instead of ``uk_percent``/``ur_percent``.
``rating_kva`` defaults to the ampacity rating sqrt(3)*V*I (cables) or
``rated_kva`` (transformers).
"""
import math
from typing import Any, Dict

from core.errors import ConfigError, GridconError
from core.utils import load_json_file
from .base import CABLE, TRANSFORMER, Branch, Bus, Network
from .catalog import get_cable


def _require(entry: Dict[str, Any], key: str, source: str, where: str) -> Any:
    if key not in entry:
        raise ConfigError(f"missing field {key!r}", source=source, field=where)
    return entry[key]


def _cable_branch(entry: Dict[str, Any], base_kv: float, source: str, where: str) -> Dict[str, Any]:
    length_km = float(entry.get("length_m", 0.0)) / 1000.0
    shunt = 0.0
    if "cable" in entry:
        try:
            cable = get_cable(entry["cable"])
        except ConfigError as e:
            raise ConfigError(str(e), source=source, field=f"{where}.cable")
        if length_km <= 0:
            raise ConfigError("length_m must be > 0", source=source, field=f"{where}.length_m")
        r, x = cable.r_per_km * length_km, cable.x_per_km * length_km
        shunt = 2 * math.pi * 50.0 * cable.c_per_km * 1e-6 * length_km
        rating = math.sqrt(3) * base_kv * cable.ampacity
    else:
        r = float(_require(entry, "r_ohm", source, where))
        x = float(_require(entry, "x_ohm", source, where))
        rating = float(_require(entry, "rating_kva", source, where))
    return {
        "series_resistance": r,
        "series_reactance": x,
        "shunt_susceptance": float(entry.get("shunt_s", shunt)),
        "rating": float(entry.get("rating_kva", rating)),
    }


def _transformer_branch(entry: Dict[str, Any], lv_kv: float, source: str, where: str) -> Dict[str, Any]:
    if "uk_percent" in entry:
        s_rated = float(_require(entry, "rated_kva", source, where)) / 1000.0  # MVA
        z = float(entry["uk_percent"]) / 100.0 * lv_kv ** 2 / s_rated
        r = float(entry.get("ur_percent", 0.0)) / 100.0 * lv_kv ** 2 / s_rated
        if r > z:
            raise ConfigError("ur_percent exceeds uk_percent", source=source, field=where)
        x = math.sqrt(z * z - r * r)
        rating = float(entry.get("rating_kva", entry["rated_kva"]))
    else:
        r = float(_require(entry, "r_ohm", source, where))
        x = float(_require(entry, "x_ohm", source, where))
        rating = float(_require(entry, "rating_kva", source, where))

    tap = entry.get("tap", {})
    position = int(tap.get("position", 0))
    neutral = int(tap.get("neutral", 0))
    return {
        "series_resistance": r,
        "series_reactance": x,
        "shunt_susceptance": 0.0,
        "rating": rating,
        "tap_position": position,
        "tap_neutral": neutral,
        "tap_step_voltage": float(tap.get("step", 0.0)),
        "tap_limits": (int(tap.get("min", position)), int(tap.get("max", position))),
    }


def network_from_dict(data: Dict[str, Any], source: str = "<dict>") -> Network:
    """
    Build a Network from its JSON representation.

    Raises:
        ConfigError: On missing or invalid fields (the message names the field)
    """
    buses = []
    for i, entry in enumerate(_require(data, "buses", source, "buses")):
        where = f"buses[{i}]"
        try:
            buses.append(Bus(id=str(_require(entry, "id", source, where)),
                             base_voltage=float(_require(entry, "base_kv", source, where)),
                             kind=entry.get("kind", "load")))
        except ConfigError:
            raise
        except GridconError as e:
            raise ConfigError(str(e), source=source, field=where)
    base_kv = {b.id: b.base_voltage for b in buses}

    branches = []
    for i, entry in enumerate(_require(data, "branches", source, "branches")):
        where = f"branches[{i}]"
        kind = entry.get("kind", CABLE)
        frm = str(_require(entry, "from", source, where))
        to = str(_require(entry, "to", source, where))
        if to not in base_kv:
            raise ConfigError(f"unknown bus {to!r}", source=source, field=f"{where}.to")
        if kind == TRANSFORMER:
            params = _transformer_branch(entry, base_kv[to], source, where)
        elif kind == CABLE:
            params = _cable_branch(entry, base_kv[to], source, where)
        else:
            raise ConfigError(f"unknown branch kind {kind!r}", source=source, field=f"{where}.kind")
        try:
            branches.append(Branch(id=str(_require(entry, "id", source, where)),
                                   from_bus=frm, to_bus=to, kind=kind, **params))
        except ConfigError:
            raise
        except GridconError as e:
            raise ConfigError(str(e), source=source, field=where)

    try:
        return Network(buses=tuple(buses), branches=tuple(branches),
                       s_base=float(data.get("s_base_kva", 100.0)),
                       name=str(data.get("name", "network")))
    except GridconError as e:
        raise ConfigError(str(e), source=source, field="network")


def load_network(path: str) -> Network:
    """
    Load a network definition file.

    Raises:
        ConfigError: If the file is missing or invalid
    """
    try:
        data = load_json_file(path)
    except FileNotFoundError:
        raise ConfigError("network file not found", source=str(path))
    except ValueError as e:
        raise ConfigError(f"invalid JSON: {e}", source=str(path))
    return network_from_dict(data, source=str(path))
