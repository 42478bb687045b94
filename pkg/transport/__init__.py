"""
Register bus between the controller and the simulated assets.
"""
from .registers import (Register, RegisterMap, RegisterBank, REGISTER_MAPS, OLTC_MAP, PV_MAP, CS_MAP,
                        BSS_MAP, METER_MAP, RTS_MAP, LOAD_MAP)
from .frames import BusFrame, READ, WRITE, ERROR_FLAG
from .server import AssetServer, serve, parse_endpoint
from .client import BusClient
from .ports import AssetPort, InProcessPort, BusPort


def get_register_map(kind: str) -> RegisterMap:
    """
    Look up a register map by asset kind.

    Raises:
        ValueError: If the kind has no register map
    """
    if kind not in REGISTER_MAPS:
        raise ValueError(f"Unknown register map: {kind}. Available maps: {list(REGISTER_MAPS.keys())}")
    return REGISTER_MAPS[kind]


__all__ = [
    'Register', 'RegisterMap', 'RegisterBank', 'REGISTER_MAPS', 'get_register_map',
    'OLTC_MAP', 'PV_MAP', 'CS_MAP', 'BSS_MAP', 'METER_MAP', 'RTS_MAP', 'LOAD_MAP',
    'BusFrame', 'READ', 'WRITE', 'ERROR_FLAG',
    'AssetServer', 'serve', 'parse_endpoint', 'BusClient',
    'AssetPort', 'InProcessPort', 'BusPort',
]
