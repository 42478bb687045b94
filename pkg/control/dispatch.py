"""
Setpoint commands and their register writes.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional
import logging

from assets.battery import BatteryModel
from assets.ev import EVModel
from assets.oltc import OLTCModel
from assets.pv import PVModel
from assets.flexibility import Flexibility, FlexibilitySet
from core.errors import InputError
from transport.ports import AssetPort
from .policy import quantize_ev

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DispatchCommand:
    """
    Setpoint for one asset.

    PV and BSS take ``p_set``/``q_set`` (kW/kVar, consumer counting), the
    charging station takes an integer ``i_set`` (A) and the OLTC ``tau_set``.
    ``release_limit`` lifts a PV feed-in cap instead of setting one.
    """
    asset_id: str
    kind: str
    p_set: Optional[float] = None
    q_set: Optional[float] = None
    i_set: Optional[int] = None
    tau_set: Optional[int] = None
    release_limit: bool = False

    def __post_init__(self):
        if self.i_set is not None and int(self.i_set) != self.i_set:
            raise InputError(f"{self.asset_id}: charging current must be integral, got {self.i_set}")

    def to_dict(self) -> Dict[str, Any]:
        data = {"asset_id": self.asset_id, "kind": self.kind}
        for key in ("p_set", "q_set", "i_set", "tau_set"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        if self.release_limit:
            data["release_limit"] = True
        return data


def _ev_command(flex: Flexibility, p_set: float, phase_voltage: float) -> Optional[DispatchCommand]:
    ev: EVModel = flex.asset
    if not ev.connected:
        return None
    current = quantize_ev(p_set, phase_voltage, ev.i_min, ev.i_max, ev.phases)
    if current is None:
        return None
    return DispatchCommand(ev.asset_id, ev.kind, i_set=current)


def commands_from_setpoints(flex: FlexibilitySet, setpoints: Dict[str, tuple],
                            phase_voltages: Dict[str, float]) -> List[DispatchCommand]:
    """
    Commands for OPF setpoints, clipped to each flexibility's bounds.

    Args:
        flex: Flexibilities of this cycle
        setpoints: Asset id -> (P kW, Q kVar)
        phase_voltages: Asset id -> phase-to-ground voltage (V) used for EV quantization

    Returns:
        Commands in flexibility order; PV caps are enabled
    """
    commands = []
    for item in flex:
        p, q = item.bounds.clip(*setpoints[item.asset_id])
        if isinstance(item.asset, EVModel):
            command = _ev_command(item, p, phase_voltages[item.asset_id])
            if command is not None:
                commands.append(command)
        elif isinstance(item.asset, (PVModel, BatteryModel)):
            commands.append(DispatchCommand(item.asset_id, item.kind, p_set=p, q_set=q))
    return commands


def commands_from_targets(flex: FlexibilitySet, phase_voltages: Dict[str, float]) -> List[DispatchCommand]:
    """
    Commands returning every flexibility to its target with Q = 0.

    PV caps are released; the BSS follows its SoC target; a connected EV
    charges at I_max.
    """
    commands = []
    for item in flex:
        p, q = item.bounds.clip(item.p_target, 0.0)
        if isinstance(item.asset, PVModel):
            commands.append(DispatchCommand(item.asset_id, item.kind, p_set=p, q_set=q, release_limit=True))
        elif isinstance(item.asset, BatteryModel):
            commands.append(DispatchCommand(item.asset_id, item.kind, p_set=p, q_set=q))
        elif isinstance(item.asset, EVModel) and item.asset.connected:
            commands.append(DispatchCommand(item.asset_id, item.kind, i_set=item.asset.i_max))
    return commands


def tap_command(oltc: OLTCModel, direction: int) -> DispatchCommand:
    """
    Raises:
        TapLimitError: If the step leaves the tap range
    """
    return DispatchCommand(oltc.asset_id, oltc.kind, tau_set=oltc.stepped(direction).position)


def write_command(port: AssetPort, command: DispatchCommand) -> None:
    """
    Write one command to its asset's registers.

    Raises:
        BusError: On transport failures
    """
    if command.kind == "oltc":
        port.write(command.asset_id, "TAP", command.tau_set)
    elif command.kind == "ev":
        port.write(command.asset_id, "I_SET", command.i_set)
    elif command.kind == "pv":
        port.write(command.asset_id, "P_SET", command.p_set)
        port.write(command.asset_id, "Q_SET", command.q_set)
        port.write(command.asset_id, "P_LIMIT_ENABLE", 0 if command.release_limit else 1)
    elif command.kind == "bss":
        port.write(command.asset_id, "P_SET", command.p_set)
        port.write(command.asset_id, "Q_SET", command.q_set)
    else:
        raise InputError(f"no register mapping for asset kind {command.kind!r}")
