"""
Curative control: violation detection, the decision rule, dispatch and the controller cycle.
"""
from .violations import ViolationReport, detect_violations, OVER, UNDER
from .policy import ControlAction, NoAction, RunOPF, TapStep, decide, quantize_ev
from .dispatch import (DispatchCommand, commands_from_setpoints, commands_from_targets, tap_command,
                       write_command)
from .controller import Controller, CycleResult, DISPATCH_TARGETS, HOLD

__all__ = [
    'ViolationReport', 'detect_violations', 'OVER', 'UNDER',
    'ControlAction', 'NoAction', 'RunOPF', 'TapStep', 'decide', 'quantize_ev',
    'DispatchCommand', 'commands_from_setpoints', 'commands_from_targets', 'tap_command', 'write_command',
    'Controller', 'CycleResult', 'DISPATCH_TARGETS', 'HOLD',
]
