"""
Limit checks on an estimated grid state.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from estimation.wls import SystemState
from optimization.problem import DEFAULT_VOLTAGE_BAND
from powerflow.newton import branch_flows

OVER = 1
UNDER = -1


@dataclass(frozen=True)
class ViolationReport:
    """
    Violations found in one cycle.

    ``voltage`` holds |V| beyond the band in p.u. for every monitored bus and
    ``flow`` the loading beyond S_max in kVA for every limited branch; zero
    means no violation.
    """
    timestamp: float
    voltage: Mapping[str, float] = field(default_factory=dict)
    voltage_direction: Mapping[str, int] = field(default_factory=dict)
    flow: Mapping[str, float] = field(default_factory=dict)

    @property
    def voltage_flags(self) -> Dict[str, bool]:
        return {bus: excess > 0 for bus, excess in self.voltage.items()}

    @property
    def flow_flags(self) -> Dict[str, bool]:
        return {branch: excess > 0 for branch, excess in self.flow.items()}

    @property
    def over_voltage(self) -> Tuple[str, ...]:
        return tuple(b for b, e in self.voltage.items() if e > 0 and self.voltage_direction.get(b) == OVER)

    @property
    def under_voltage(self) -> Tuple[str, ...]:
        return tuple(b for b, e in self.voltage.items() if e > 0 and self.voltage_direction.get(b) == UNDER)

    @property
    def has_voltage(self) -> bool:
        return any(e > 0 for e in self.voltage.values())

    @property
    def has_flow(self) -> bool:
        return any(e > 0 for e in self.flow.values())

    @property
    def clean(self) -> bool:
        return not (self.has_voltage or self.has_flow)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "timestamp": self.timestamp,
            "over_voltage": {b: self.voltage[b] for b in self.over_voltage},
            "under_voltage": {b: self.voltage[b] for b in self.under_voltage},
            "flow": {b: e for b, e in self.flow.items() if e > 0},
        }


def detect_violations(state: SystemState, limits: Mapping[str, float],
                      voltage_band: Tuple[float, float] = DEFAULT_VOLTAGE_BAND,
                      bus_bands: Optional[Mapping[str, Tuple[float, float]]] = None,
                      monitored_buses: Optional[Iterable[str]] = None) -> ViolationReport:
    """
    Compare an estimated state with the voltage bands and branch limits.

    Args:
        state: SE result
        limits: Branch id -> S_max (kVA) in force at ``state.timestamp``
        voltage_band: Default (V_min, V_max) in p.u.
        bus_bands: Per-bus band overrides
        monitored_buses: Buses to check; every bus except the slack by default

    Returns:
        ViolationReport
    """
    net = state.net
    bus_bands = bus_bands or {}
    if monitored_buses is None:
        slack_id = net.buses[net.slack_index].id
        monitored_buses = [b for b in net.bus_ids if b != slack_id]

    voltage: Dict[str, float] = {}
    direction: Dict[str, int] = {}
    for bus_id in monitored_buses:
        v_min, v_max = bus_bands.get(bus_id, voltage_band)
        v = state.voltage(bus_id)
        if v > v_max:
            voltage[bus_id], direction[bus_id] = v - v_max, OVER
        elif v < v_min:
            voltage[bus_id], direction[bus_id] = v_min - v, UNDER
        else:
            voltage[bus_id] = 0.0

    flow: Dict[str, float] = {}
    if limits:
        S_from, S_to = branch_flows(net, state.V, state.delta)
        loading = np.maximum(np.abs(S_from), np.abs(S_to))
        for branch_id, s_max in limits.items():
            flow[branch_id] = max(float(loading[net.branch_index(branch_id)]) - s_max, 0.0)

    return ViolationReport(timestamp=state.timestamp, voltage=voltage, voltage_direction=direction, flow=flow)
