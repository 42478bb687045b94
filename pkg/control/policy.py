"""
Per-cycle decision rule and EV current quantization.
"""
from dataclasses import dataclass
from typing import Optional, Union
import math

from assets.oltc import OLTCModel
from core.errors import InputError
from estimation.wls import SystemState
from .violations import ViolationReport


@dataclass(frozen=True)
class NoAction:
    name = "no-action"

    def to_dict(self):
        return {"action": self.name}


@dataclass(frozen=True)
class RunOPF:
    reason: str = ""
    name = "run-opf"

    def to_dict(self):
        return {"action": self.name, "reason": self.reason}


@dataclass(frozen=True)
class TapStep:
    direction: int
    name = "tap-step"

    def __post_init__(self):
        if self.direction not in (-1, 1):
            raise InputError(f"tap step must be +1 or -1, got {self.direction}")

    def to_dict(self):
        return {"action": self.name, "direction": self.direction}


ControlAction = Union[NoAction, RunOPF, TapStep]


def decide(state: SystemState, report: ViolationReport, oltc_stepped_last_cycle: bool,
           oltc: Optional[OLTCModel] = None) -> ControlAction:
    """
    Choose between a tap step, an OPF run and doing nothing.

    A tap step replaces the OPF only when the cycle shows voltage violations of
    a single sign, no flow violation, the OLTC did not step in the previous
    cycle and the resulting position stays within its limits. Over-voltage
    lowers the tap, under-voltage raises it.

    Args:
        state: SE result of this cycle
        report: Violations found in ``state``
        oltc_stepped_last_cycle: Whether the previous cycle stepped the OLTC
        oltc: Present OLTC position and limits; None when the grid has no OLTC

    Returns:
        NoAction, RunOPF or TapStep

    Raises:
        InputError: If state and report belong to different cycles
    """
    if state.timestamp != report.timestamp:
        raise InputError(f"state at {state.timestamp} s, report at {report.timestamp} s")
    if report.clean:
        return NoAction()
    if report.has_flow:
        return RunOPF("flow violation")
    over, under = report.over_voltage, report.under_voltage
    if over and under:
        return RunOPF("over- and under-voltage")
    if oltc is None:
        return RunOPF("no tap changer")
    if oltc_stepped_last_cycle:
        return RunOPF("tap changer stepped in the previous cycle")
    direction = -1 if over else 1
    if not oltc.can_step(direction):
        return RunOPF("tap limit reached")
    return TapStep(direction)


def quantize_ev(p_set: float, v_cs: float, i_min: int = 6, i_max: int = 16, phases: int = 3) -> Optional[int]:
    """
    Integer charging current for an active-power setpoint.

    The current is rounded down so the realized power never exceeds the
    setpoint, then clamped to [i_min, i_max].

    Args:
        p_set: Charging power in kW
        v_cs: Phase-to-ground voltage at the station in V
        i_min: Minimum charging current in A
        i_max: Maximum charging current in A
        phases: Number of charging phases

    Returns:
        Current in A, or None when no charging is commanded (p_set <= 0)
    """
    if v_cs <= 0:
        raise InputError(f"station voltage must be > 0, got {v_cs}")
    if p_set <= 0:
        return None
    # tolerance keeps exact multiples (e.g. 16 A power) from rounding down
    current = math.floor(p_set * 1000.0 / (phases * v_cs) + 1e-9)
    return int(min(max(current, i_min), i_max))
