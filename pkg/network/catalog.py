"""
Low-voltage cable catalog.

Values are manufacturer-typical engineering defaults (positive-sequence R' at
operating temperature, X' at 50 Hz, ampacity laid in ground/air as usual for
the type). They are not measured lab data.
"""
from dataclasses import dataclass
from typing import Dict, List

from core.errors import ConfigError


@dataclass(frozen=True)
class CableType:
    name: str
    r_per_km: float  # ohm/km
    x_per_km: float  # ohm/km
    ampacity: float  # A
    c_per_km: float = 0.0  # uF/km, ignored when 0


CABLE_CATALOG: Dict[str, CableType] = {
    "NAYY 4x150 SE": CableType("NAYY 4x150 SE", r_per_km=0.206, x_per_km=0.080, ampacity=275.0, c_per_km=0.0),
    "NAYY 4x25": CableType("NAYY 4x25", r_per_km=1.200, x_per_km=0.082, ampacity=102.0),
    "NYY-J 5x16 RE": CableType("NYY-J 5x16 RE", r_per_km=1.150, x_per_km=0.083, ampacity=102.0),
    "H07RN-F 5G6": CableType("H07RN-F 5G6", r_per_km=3.300, x_per_km=0.095, ampacity=44.0),
}


def get_cable(name: str) -> CableType:
    """
    Look up a cable type by name.

    Raises:
        ConfigError: If the type is not in the catalog
    """
    try:
        return CABLE_CATALOG[name]
    except KeyError:
        raise ConfigError(f"unknown cable type {name!r}; known: {list_cables()}", field="cable")


def list_cables() -> List[str]:
    return sorted(CABLE_CATALOG)
