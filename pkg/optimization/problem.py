"""
OPF problem definition and assembly from an estimated state.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple
import math

import numpy as np

from assets.flexibility import FlexibilitySet
from core.errors import ConfigError, InputError
from estimation.wls import SystemState
from network.base import Network
from powerflow.newton import InjectionSpec

DEFAULT_VOLTAGE_BAND = (0.9, 1.1)
ANGLE_LIMIT = 2.0 * math.pi


def angle_bounds() -> Tuple[float, float]:
    """Box on voltage angles in rad (+-360 degrees); the slack angle stays at 0."""
    return (-ANGLE_LIMIT, ANGLE_LIMIT)


@dataclass(frozen=True)
class OPFProblem:
    """
    One curative redispatch problem.

    ``base_injections`` holds the non-flexible consumption (kW/kVar) at every
    non-slack bus; flexibilities add their P/Q on top. ``limits`` maps branch
    ids to the S_max (kVA) active at this time.
    """
    net: Network
    base_injections: InjectionSpec
    flex: FlexibilitySet
    limits: Mapping[str, float]
    voltage_band: Tuple[float, float] = DEFAULT_VOLTAGE_BAND
    bus_bands: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    initial_state: Optional[Tuple[np.ndarray, np.ndarray]] = None
    slack_voltage: float = 1.0
    timestamp: float = 0.0

    def __post_init__(self):
        slack_id = self.net.buses[self.net.slack_index].id
        for flex in self.flex:
            if not self.net.has_bus(flex.bus):
                raise ConfigError(f"flexibility {flex.asset_id} at unknown bus {flex.bus!r}")
            if flex.bus == slack_id:
                raise ConfigError(f"flexibility {flex.asset_id} sits at the slack bus")
        for branch_id, limit in self.limits.items():
            if not self.net.has_branch(branch_id):
                raise ConfigError(f"limit for unknown branch {branch_id!r}", field="limits")
            if not limit > 0:
                raise ConfigError(f"limit for {branch_id} must be > 0, got {limit}", field="limits")
        for bus_id, (low, high) in [("*", self.voltage_band)] + list(self.bus_bands.items()):
            if not 0 < low < high:
                raise InputError(f"voltage band for {bus_id} must satisfy 0 < V_min < V_max")

    def band(self, bus_id: str) -> Tuple[float, float]:
        return tuple(self.bus_bands.get(bus_id, self.voltage_band))

    def band_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        bands = np.array([self.band(b) for b in self.net.bus_ids], dtype=float)
        return bands[:, 0], bands[:, 1]

    def limit_vector(self) -> Tuple[np.ndarray, np.ndarray]:
        """(branch indices, S_max in kVA) of limited branches, in network order."""
        ids = [b for b in self.net.branch_ids if b in self.limits]
        return (np.array([self.net.branch_index(b) for b in ids], dtype=int),
                np.array([self.limits[b] for b in ids], dtype=float))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "timestamp": self.timestamp,
            "network": self.net.name,
            "base_injections": {"p": dict(self.base_injections.p), "q": dict(self.base_injections.q)},
            "flexibilities": self.flex.to_dict(),
            "limits": dict(self.limits),
            "voltage_band": list(self.voltage_band),
            "bus_bands": {k: list(v) for k, v in self.bus_bands.items()},
        }


def assemble(net: Network, state: SystemState, flex: FlexibilitySet,
             limits: Mapping[str, float],
             voltage_band: Tuple[float, float] = DEFAULT_VOLTAGE_BAND,
             bus_bands: Optional[Mapping[str, Tuple[float, float]]] = None,
             measured: Optional[Mapping[str, Tuple[float, float]]] = None) -> OPFProblem:
    """
    Build the OPF problem for the current cycle.

    Non-flexible consumption is the estimated bus consumption minus the
    flexibilities' present P/Q (``measured``, kW/kVar per asset id).

    Args:
        net: Network at the present tap position
        state: SE result
        flex: Flexibilities with bounds, targets and costs
        limits: Branch id -> S_max (kVA) at the current time
        voltage_band: Default (V_min, V_max) in p.u.
        bus_bands: Per-bus overrides of the band
        measured: Present P/Q of each flexibility

    Returns:
        OPFProblem

    Raises:
        ConfigError: Unknown branch in the limits or flexibility at an unknown bus
    """
    for branch_id in limits:
        if not net.has_branch(branch_id):
            raise ConfigError(f"limit for unknown branch {branch_id!r}", field="limits")
    measured = measured or {}
    slack_id = net.buses[net.slack_index].id
    p: Dict[str, float] = {}
    q: Dict[str, float] = {}
    for bus_id in net.bus_ids:
        if bus_id == slack_id:
            continue
        s = state.consumption_kw(bus_id)
        p[bus_id], q[bus_id] = s.real, s.imag
    for item in flex:
        if item.bus in p:
            p_now, q_now = measured.get(item.asset_id, (0.0, 0.0))
            p[item.bus] -= p_now
            q[item.bus] -= q_now
    return OPFProblem(net=net, base_injections=InjectionSpec(p=p, q=q), flex=flex,
                      limits=dict(limits), voltage_band=tuple(voltage_band),
                      bus_bands=dict(bus_bands or {}),
                      initial_state=(state.V.copy(), state.delta.copy()),
                      slack_voltage=float(state.V[net.slack_index]),
                      timestamp=state.timestamp)
