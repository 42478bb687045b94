"""
The controller: one estimation-decision-dispatch cycle per control period.
"""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple
import logging

from assets.base import AssetModel
from assets.battery import BatteryModel
from assets.ev import EVModel
from assets.flexibility import FlexibilitySet, GridContext, build_flexibility
from assets.oltc import OLTCModel
from assets.pv import PVModel
from config import Settings
from core.errors import BusError, BusTimeoutError, DivergenceError, InputError, UnobservableError
from core.utils import PathLike, append_json_line, format_clock
from estimation.measurements import Measurement, MeasurementKind, MeasurementSet
from estimation.wls import SystemState, estimate
from network.admittance import apply_tap
from network.base import Network
from optimization.problem import assemble
from optimization.solver import INFEASIBLE, OPFSolution, solve
from scenarios.base import LimitSchedule, MeterSpec, Scenario
from transport.ports import AssetPort
from .dispatch import (DispatchCommand, commands_from_setpoints, commands_from_targets, tap_command,
                       write_command)
from .policy import ControlAction, RunOPF, TapStep, decide
from .violations import ViolationReport, detect_violations

logger = logging.getLogger(__name__)

DISPATCH_TARGETS = "dispatch_targets"
HOLD = "hold"


@dataclass
class CycleResult:
    """Outcome of one control cycle."""
    timestamp: float
    commands: List[DispatchCommand] = field(default_factory=list)
    record: Dict[str, Any] = field(default_factory=dict)
    state: Optional[SystemState] = None
    report: Optional[ViolationReport] = None
    action: Optional[ControlAction] = None
    opf: Optional[OPFSolution] = None
    degraded: bool = False


class Controller:
    """
    Curative congestion controller.

    Reads meters and assets through an AssetPort, estimates the grid state,
    and either steps the tap changer, runs the OPF or applies the idle policy.
    Cycles are strictly sequential; the instance remembers whether the OLTC
    stepped in the previous cycle.
    """

    def __init__(self, network: Network, assets: Dict[str, AssetModel], meters: Tuple[MeterSpec, ...],
                 schedule: LimitSchedule, port: AssetPort, settings: Optional[Settings] = None,
                 period: float = 15.0, rts_id: str = "RTS", log_path: Optional[PathLike] = None):
        """
        Args:
            network: Grid model at its initial tap position
            assets: Asset models by id (static parameters; dynamic values are read each cycle)
            meters: Measurement devices
            schedule: Branch limits and voltage bands
            port: Register access to assets and meters
            settings: Tolerances and policies (defaults when omitted)
            period: Control period in s
            rts_id: Asset id of the real-time simulator block
            log_path: JSON-lines file the cycle records are appended to
        """
        self.network = network
        self.assets = dict(assets)
        self.meters = tuple(meters)
        self.schedule = schedule
        self.port = port
        self.settings = settings or Settings()
        self.period = period
        self.rts_id = rts_id
        self.log_path = log_path
        self.oltc_stepped_last_cycle = False
        self.history: List[CycleResult] = []
        if self.settings.control.idle_policy not in (DISPATCH_TARGETS, HOLD):
            raise InputError(f"unknown idle policy {self.settings.control.idle_policy!r}")

    @classmethod
    def from_scenario(cls, scenario: Scenario, port: AssetPort, settings: Optional[Settings] = None,
                      log_path: Optional[PathLike] = None) -> "Controller":
        return cls(network=scenario.network, assets=scenario.assets, meters=scenario.meters,
                   schedule=scenario.schedule, port=port, settings=settings, period=scenario.period,
                   rts_id=scenario.rts_id, log_path=log_path)

    @property
    def oltc(self) -> Optional[OLTCModel]:
        for asset in self.assets.values():
            if isinstance(asset, OLTCModel):
                return asset
        return None

    def wait_for_sync(self, timeout: Optional[float] = None) -> None:
        """
        Block until the scenario start is signalled.

        Raises:
            BusTimeoutError: If the sync bit is not released within the timeout
        """
        timeout = self.settings.transport.sync_timeout_s if timeout is None else timeout
        if not self.port.wait_sync(self.rts_id, timeout=timeout):
            raise BusTimeoutError(f"{self.rts_id}: sync bit not released within {timeout:.1f} s")

    def read_measurements(self, t: float) -> MeasurementSet:
        """Read every meter; a meter that fails to answer is left out of the set."""
        variances = self.settings.estimation.variances
        s_base = self.network.s_base
        measurements: List[Measurement] = []
        for meter in self.meters:
            names = []
            if "voltage" in meter.measures:
                names.append("V")
            if "injection" in meter.measures or "flow" in meter.measures:
                names += ["P", "Q"]
            try:
                values = self.port.read(meter.meter_id, names)
            except BusError as e:
                logger.warning("t=%s meter %s unavailable: %s", format_clock(t), meter.meter_id, e)
                continue
            if "voltage" in meter.measures:
                measurements.append(Measurement(MeasurementKind.VOLTAGE, meter.bus, values["V"],
                                                variances.voltage))
            if "injection" in meter.measures:
                measurements.append(Measurement(MeasurementKind.P_INJECTION, meter.bus, values["P"] / s_base,
                                                variances.injection))
                measurements.append(Measurement(MeasurementKind.Q_INJECTION, meter.bus, values["Q"] / s_base,
                                                variances.injection))
            if "flow" in meter.measures:
                measurements.append(Measurement(MeasurementKind.P_FLOW, meter.branch, values["P"] / s_base,
                                                variances.flow))
                measurements.append(Measurement(MeasurementKind.Q_FLOW, meter.branch, values["Q"] / s_base,
                                                variances.flow))
        return MeasurementSet(measurements=tuple(measurements), timestamp=t)

    def _read_oltc(self) -> Optional[OLTCModel]:
        oltc = self.oltc
        if oltc is None:
            return None
        try:
            position = int(round(self.port.read(oltc.asset_id, ["TAP"])["TAP"]))
            oltc = replace(oltc, position=position)
            self.assets[oltc.asset_id] = oltc
        except BusError as e:
            logger.warning("OLTC %s unavailable, assuming tap %d: %s", oltc.asset_id, oltc.position, e)
        return oltc

    def _read_flexibilities(self, state: SystemState) -> Tuple[FlexibilitySet, Dict[str, Tuple[float, float]]]:
        """Refresh dynamic asset values and build this cycle's flexibilities and their present P/Q."""
        assets_settings = self.settings.assets
        try:
            rts = self.port.read(self.rts_id, ["TEMPERATURE", "IRRADIANCE"])
        except BusError as e:
            logger.warning("RTS unavailable, PV available power taken as 0: %s", e)
            rts = {"TEMPERATURE": 25.0, "IRRADIANCE": 0.0}
        horizon_h = self.period * assets_settings.bss_horizon_periods / 3600.0

        items = []
        measured: Dict[str, Tuple[float, float]] = {}
        for asset_id, asset in sorted(self.assets.items()):
            if not asset.controllable:
                continue
            try:
                if isinstance(asset, BatteryModel):
                    values = self.port.read(asset_id, ["SOC", "P", "Q"])
                    asset = replace(asset, e_t0=values["SOC"])
                    measured[asset_id] = (values["P"], values["Q"])
                elif isinstance(asset, PVModel):
                    values = self.port.read(asset_id, ["P", "Q"])
                    measured[asset_id] = (values["P"], values["Q"])
                elif isinstance(asset, EVModel):
                    values = self.port.read(asset_id, ["P", "CONNECTED"])
                    asset = replace(asset, connected=values["CONNECTED"] >= 1)
                    measured[asset_id] = (values["P"], 0.0)
            except BusError as e:
                logger.warning("Asset %s unavailable, using last known values: %s", asset_id, e)
            self.assets[asset_id] = asset
            context = GridContext(irradiance=max(rts["IRRADIANCE"], 0.0), temperature=rts["TEMPERATURE"],
                                  voltage=state.voltage(asset.bus),
                                  nominal_phase_voltage=self.settings.control.ev_nominal_voltage,
                                  pv_headroom=assets_settings.pv_headroom, bss_horizon=horizon_h,
                                  bss_target_literal=assets_settings.bss_target_literal)
            items.append(build_flexibility(asset, context))
        return FlexibilitySet(tuple(items)), measured

    def _phase_voltages(self, state: SystemState, flex: FlexibilitySet) -> Dict[str, float]:
        nominal = self.settings.control.ev_nominal_voltage
        return {item.asset_id: state.voltage(item.bus) * nominal for item in flex}

    def control_cycle(self, t: float) -> CycleResult:
        """
        Run one cycle at scenario time ``t``.

        SE failures hold the previous setpoints and mark the cycle degraded; an
        infeasible OPF dispatches its least-violation point and is flagged.

        Returns:
            CycleResult with the dispatched commands and the cycle record
        """
        result = CycleResult(timestamp=t)
        record: Dict[str, Any] = {"timestamp": t, "clock": format_clock(t), "degraded": False}
        result.record = record

        z = self.read_measurements(t)
        oltc = self._read_oltc()
        net = self.network if oltc is None else apply_tap(self.network, oltc.branch, oltc.position)
        record["tap"] = None if oltc is None else oltc.position
        record["measurements"] = len(z)

        est = self.settings.estimation
        try:
            state, se_report = estimate(net, z, tol=est.tol, max_iter=est.max_iter,
                                        max_condition=est.max_condition)
        except (UnobservableError, DivergenceError) as e:
            logger.warning("t=%s state estimation failed, holding setpoints: %s", format_clock(t), e)
            record.update(degraded=True, degraded_reason=f"estimation: {e}", decision=None, commands=[])
            self.oltc_stepped_last_cycle = False
            result.degraded = True
            return self._finish(result)
        result.state = state
        record["estimation"] = se_report.to_dict()
        record["state"] = {bus_id: {"V": float(state.V[i]), "delta": float(state.delta[i])}
                           for i, bus_id in enumerate(net.bus_ids)}

        limits = self.schedule.limits_at(t)
        report = detect_violations(state, limits, self.schedule.voltage_band, self.schedule.bus_bands)
        action = decide(state, report, self.oltc_stepped_last_cycle, oltc)
        result.report, result.action = report, action
        record["violations"] = report.to_dict()
        record["decision"] = action.to_dict()

        flex, measured = self._read_flexibilities(state)
        phase_voltages = self._phase_voltages(state, flex)
        if isinstance(action, TapStep):
            commands = [tap_command(oltc, action.direction)]
        elif isinstance(action, RunOPF):
            commands = self._run_opf(net, state, flex, limits, measured, phase_voltages, result)
        elif self.settings.control.idle_policy == DISPATCH_TARGETS:
            commands = commands_from_targets(flex, phase_voltages)
        else:
            commands = []

        failed = self._write(commands, t)
        stepped = isinstance(action, TapStep) and oltc.asset_id not in failed
        if stepped:
            self.assets[oltc.asset_id] = oltc.stepped(action.direction)
        self.oltc_stepped_last_cycle = stepped
        result.commands = commands
        record["commands"] = [c.to_dict() for c in commands]
        if failed:
            record["write_failures"] = sorted(failed)
        return self._finish(result)

    def _run_opf(self, net: Network, state: SystemState, flex: FlexibilitySet, limits: Dict[str, float],
                 measured: Dict[str, Tuple[float, float]], phase_voltages: Dict[str, float],
                 result: CycleResult) -> List[DispatchCommand]:
        problem = assemble(net, state, flex, limits, self.schedule.voltage_band, self.schedule.bus_bands,
                           measured=measured)
        opt = self.settings.optimization
        solution = solve(problem, tol_eq=opt.tol_eq, tol_ineq=opt.tol_ineq, max_iter=opt.max_iter,
                         elastic_weight=opt.elastic_weight, pf_tol=self.settings.powerflow.tol)
        result.opf = solution
        result.record["opf"] = {"status": solution.status, "phase": solution.phase,
                                "objective": solution.objective, "iterations": solution.iterations,
                                "feasibility": solution.feasibility.to_dict()}
        if solution.status == INFEASIBLE:
            logger.warning("t=%s OPF infeasible, dispatching least-violation setpoints (flow %.2e, voltage %.2e)",
                           format_clock(state.timestamp), solution.feasibility.flow, solution.feasibility.voltage)
            result.record["degraded"] = True
            result.record["degraded_reason"] = "opf infeasible"
            result.degraded = True
        return commands_from_setpoints(flex, solution.setpoints, phase_voltages)

    def _write(self, commands: List[DispatchCommand], t: float) -> set:
        failed = set()
        for command in commands:
            try:
                write_command(self.port, command)
            except BusError as e:
                # the asset keeps its previous setpoint
                logger.warning("t=%s write to %s failed: %s", format_clock(t), command.asset_id, e)
                failed.add(command.asset_id)
        return failed

    def _finish(self, result: CycleResult) -> CycleResult:
        self.history.append(result)
        if self.log_path is not None:
            append_json_line(result.record, self.log_path)
        return result
