"""
Simulated test grid: asset behaviour, power flow and register publishing.

The simulator plays the role of the lab: at each scenario time it applies the
setpoints found in the asset registers, solves the power flow, integrates the
battery and publishes asset, meter and RTS registers for the controller.
"""
from dataclasses import replace
from typing import Any, Dict, List, Optional
import logging
import math
import threading

import numpy as np

from assets.battery import BatteryModel, bss_integrate_soc
from assets.ev import EVModel
from assets.load import ResistiveLoad
from assets.oltc import OLTCModel
from assets.pv import PVModel, pv_available_power
from config import Settings
from core.errors import DivergenceError
from core.utils import format_clock
from estimation.measurements import MeasurementKind, synthesize_measurements
from network.admittance import apply_tap
from powerflow.newton import InjectionSpec, PFSolution, solve_pf
from scenarios.base import Scenario
from transport.registers import REGISTER_MAPS, RegisterBank

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)


def step_seed(seed: int, step: int) -> int:
    """Independent, reproducible noise seed for one cycle."""
    return int(np.random.SeedSequence([seed, step]).generate_state(1)[0])


class GridSimulator:
    """
    Register-level twin of the test grid.

    Args:
        scenario: Scenario to simulate
        settings: Noise, tolerance and asset settings
        seed: Measurement-noise seed (defaults to ``settings.seed``)
    """

    def __init__(self, scenario: Scenario, settings: Optional[Settings] = None, seed: Optional[int] = None):
        self.scenario = scenario
        self.settings = settings or Settings()
        self.seed = self.settings.seed if seed is None else seed
        self.net = scenario.network
        self.assets: Dict[str, Any] = dict(scenario.assets)
        self.banks: Dict[str, RegisterBank] = {}
        self.solution: Optional[PFSolution] = None
        self.last_row: Optional[Dict[str, Any]] = None
        self.diverged = False
        self.time = scenario.t0
        self.step_index = 0
        self._phase_voltage: Dict[str, float] = {}
        self._lock = threading.RLock()
        self._build_banks()

    def _build_banks(self) -> None:
        units: Dict[str, int] = {}
        for asset_id, (_, _, unit) in self.scenario.endpoints.items():
            units[asset_id] = unit
        for asset_id, asset in self.assets.items():
            self.banks[asset_id] = RegisterBank(asset_id, REGISTER_MAPS[asset.kind], units.get(asset_id, 1))
        for meter in self.scenario.meters:
            self.banks[meter.meter_id] = RegisterBank(meter.meter_id, REGISTER_MAPS["meter"],
                                                      units.get(meter.meter_id, 1))
        rts_id = self.scenario.rts_id
        self.banks[rts_id] = RegisterBank(rts_id, REGISTER_MAPS["rts"], units.get(rts_id, 1))

        # static registers and the setpoints an idle lab starts from
        for asset_id, asset in self.assets.items():
            bank = self.banks[asset_id]
            if isinstance(asset, OLTCModel):
                bank.set("TAP", asset.position)
                bank.set("TAP_MIN", asset.limits[0])
                bank.set("TAP_MAX", asset.limits[1])
                bank.set("STEP_VOLTAGE", asset.step_voltage)
            elif isinstance(asset, PVModel):
                bank.set("P_MAX", asset.p_ref)
                bank.set("P_LIMIT_ENABLE", 0)
            elif isinstance(asset, BatteryModel):
                bank.set("SOC_MIN", asset.e_min)
                bank.set("SOC_MAX", asset.e_max)
                bank.set("S_MAX", asset.s_max)
                bank.set("E_TOTAL", asset.e_total)
                bank.set("SOC", asset.e_t0)
            elif isinstance(asset, EVModel):
                bank.set("I_MIN", asset.i_min)
                bank.set("I_MAX", asset.i_max)
                bank.set("I_SET", asset.i_max)
        self.banks[rts_id].set("SYNC", 0)

    def release_sync(self) -> None:
        """Signal the scenario start to the controller."""
        self.banks[self.scenario.rts_id].set("SYNC", 1)

    def _apply_events(self, t: float) -> None:
        for event in self.scenario.events:
            asset = self.assets[event.asset_id]
            if event.active(t) and getattr(asset, event.attribute) != event.value:
                logger.debug("t=%s %s.%s -> %r", format_clock(t), event.asset_id, event.attribute, event.value)
                self.assets[event.asset_id] = replace(asset, **{event.attribute: event.value})

    def _asset_powers(self, t: float) -> Dict[str, Dict[str, float]]:
        """Realized P/Q (kW/kVar, consumer counting) of every asset from its setpoint registers."""
        irradiance = self.scenario.irradiance.value_at(t)
        temperature = self.scenario.temperature.value_at(t)
        powers: Dict[str, Dict[str, float]] = {}
        for asset_id, asset in self.assets.items():
            bank = self.banks[asset_id]
            if isinstance(asset, PVModel):
                available = pv_available_power(asset, max(irradiance, 0.0), temperature,
                                               self.settings.assets.pv_headroom)
                feed = available
                if bank.get("P_LIMIT_ENABLE") >= 1:
                    feed = min(available, max(-bank.get("P_SET"), 0.0))
                q_max = asset.s_max * asset.sin_phi_max
                powers[asset_id] = {"P": -feed, "Q": min(max(bank.get("Q_SET"), -q_max), q_max),
                                    "available": available}
            elif isinstance(asset, BatteryModel):
                p = min(max(bank.get("P_SET"), -asset.s_max), asset.s_max)
                if (p > 0 and asset.e_t0 >= asset.e_max) or (p < 0 and asset.e_t0 <= asset.e_min):
                    p = 0.0
                q_max = asset.s_max * asset.sin_phi_max
                powers[asset_id] = {"P": p, "Q": min(max(bank.get("Q_SET"), -q_max), q_max)}
            elif isinstance(asset, EVModel):
                current = 0
                if asset.connected:
                    current = int(min(max(bank.get("I_SET"), asset.i_min), asset.i_max))
                v = self._phase_voltage.get(asset_id, self.settings.control.ev_nominal_voltage)
                powers[asset_id] = {"P": asset.power(current, v), "Q": 0.0, "I": float(current)}
            elif isinstance(asset, ResistiveLoad):
                powers[asset_id] = {"P": asset.demand(self.scenario.loads[asset_id].value_at(t)), "Q": 0.0}
        return powers

    def _network(self):
        for asset_id, asset in self.assets.items():
            if isinstance(asset, OLTCModel):
                position = int(round(self.banks[asset_id].get("TAP")))
                if position != asset.position:
                    asset = replace(asset, position=position)
                    self.assets[asset_id] = asset
                return apply_tap(self.net, asset.branch, asset.position), asset
        return self.net, None

    def solve(self, t: float) -> Dict[str, Any]:
        """
        Solve the grid at time ``t`` with the present setpoints and publish registers.

        Returns:
            Trace row

        Raises:
            DivergenceError: If the power flow does not converge
        """
        with self._lock:
            self.time = t
            self._apply_events(t)
            net, oltc = self._network()
            powers = self._asset_powers(t)
            p: Dict[str, float] = {}
            q: Dict[str, float] = {}
            for asset_id, values in powers.items():
                bus = self.assets[asset_id].bus
                p[bus] = p.get(bus, 0.0) + values["P"]
                q[bus] = q.get(bus, 0.0) + values["Q"]
            pf = self.settings.powerflow
            try:
                solution = solve_pf(net, InjectionSpec(p=p, q=q), tol=pf.tol, max_iter=pf.max_iter)
            except DivergenceError as e:
                logger.warning("t=%s power flow diverged (mismatch %.3e after %d iterations)",
                               format_clock(t), e.mismatch, e.iterations)
                raise
            self.solution = solution
            self._publish(t, solution, powers, oltc)
            self.last_row = self._row(t, solution, powers, oltc)
            return dict(self.last_row)

    def _carry_forward(self, t: float) -> Dict[str, Any]:
        """Row at ``t`` repeating the last converged grid state; registers keep their values."""
        row = dict(self.last_row)
        row["time_s"] = t
        row["clock"] = format_clock(t)
        limits = self.scenario.schedule.limits_at(t)
        for branch_id in self.net.branch_ids:
            row[f"S_max.{branch_id}"] = limits.get(branch_id)
        for asset_id, asset in self.assets.items():
            if isinstance(asset, BatteryModel):
                row[f"SOC.{asset_id}"] = asset.e_t0
                self.banks[asset_id].set("SOC", asset.e_t0)
        logger.warning("t=%s carrying the state of t=%s forward", format_clock(t),
                       format_clock(self.last_row["time_s"]))
        return row

    def advance(self, t: float) -> Dict[str, Any]:
        """
        Solve at ``t`` and integrate the battery energy over one period.

        A diverged power flow repeats the last converged state and sets
        ``diverged`` for this cycle.

        Raises:
            DivergenceError: If the power flow diverges before any cycle converged
        """
        with self._lock:
            try:
                row = self.solve(t)
                self.diverged = False
            except DivergenceError:
                if self.last_row is None:
                    raise
                row = self._carry_forward(t)
                self.diverged = True
            hours = self.scenario.period / 3600.0
            for asset_id, asset in list(self.assets.items()):
                if isinstance(asset, BatteryModel):
                    self.assets[asset_id] = bss_integrate_soc(asset, row[f"P.{asset_id}"], hours,
                                                              self.settings.assets.bss_roundtrip_efficiency)
            for asset_id, asset in self.assets.items():
                if isinstance(asset, EVModel):
                    self._phase_voltage[asset_id] = (self.solution.voltage(asset.bus)
                                                     * self.settings.control.ev_nominal_voltage)
            self.step_index += 1
            return row

    def refresh(self, *_args) -> None:
        """Re-solve at the current time; used as the register write hook when serving assets."""
        with self._lock:
            try:
                self.solve(self.time)
            except DivergenceError:
                pass

    def _publish(self, t: float, solution: PFSolution, powers: Dict[str, Dict[str, float]],
                 oltc: Optional[OLTCModel]) -> None:
        nominal = self.settings.control.ev_nominal_voltage
        s_base = self.net.s_base
        for asset_id, asset in self.assets.items():
            bank = self.banks[asset_id]
            v_phase = solution.voltage(asset.bus) * nominal
            if isinstance(asset, OLTCModel):
                bank.set("V", v_phase)
                continue
            values = powers[asset_id]
            s = math.hypot(values["P"], values["Q"])
            bank.set("P", values["P"])
            if isinstance(asset, PVModel):
                bank.set("V", v_phase)
                bank.set("Q", values["Q"])
            elif isinstance(asset, BatteryModel):
                bank.set("SOC", asset.e_t0)
                bank.set("V", v_phase)
                bank.set("Q", values["Q"])
                bank.set("S", s)
                bank.set("I", s * 1000.0 / (3.0 * v_phase))
            elif isinstance(asset, EVModel):
                bank.set("I", values["I"])
                bank.set("CONNECTED", 1 if asset.connected else 0)

        rts = self.banks[self.scenario.rts_id]
        rts.set("IRRADIANCE", max(self.scenario.irradiance.value_at(t), 0.0))
        rts.set("TEMPERATURE", self.scenario.temperature.value_at(t))

        est = self.settings.estimation
        z = synthesize_measurements(solution, step_seed(self.seed, self.step_index), est.variances,
                                    placement=self.scenario.placement, noise_scale=est.noise_scale,
                                    timestamp=t)
        readings: Dict[tuple, float] = {(m.kind, m.location): m.value for m in z}
        for meter in self.scenario.meters:
            bank = self.banks[meter.meter_id]
            if meter.bus is not None:
                v = readings.get((MeasurementKind.VOLTAGE, meter.bus), solution.voltage(meter.bus))
                p = readings.get((MeasurementKind.P_INJECTION, meter.bus), 0.0) * s_base
                q = readings.get((MeasurementKind.Q_INJECTION, meter.bus), 0.0) * s_base
                base_kv = self.net.buses[self.net.bus_index(meter.bus)].base_voltage
            else:
                branch = self.net.branch(meter.branch)
                v = solution.voltage(branch.from_bus)
                p = readings.get((MeasurementKind.P_FLOW, meter.branch), 0.0) * s_base
                q = readings.get((MeasurementKind.Q_FLOW, meter.branch), 0.0) * s_base
                base_kv = self.net.buses[self.net.bus_index(branch.from_bus)].base_voltage
            s = math.hypot(p, q)
            bank.set("V", v)
            bank.set("P", p)
            bank.set("Q", q)
            bank.set("S", s)
            bank.set("I", s / (SQRT3 * v * base_kv) if v > 0 else 0.0)
            bank.set("PF", abs(p) / s if s > 0 else 1.0)

    def _row(self, t: float, solution: PFSolution, powers: Dict[str, Dict[str, float]],
             oltc: Optional[OLTCModel]) -> Dict[str, Any]:
        row: Dict[str, Any] = {"time_s": t, "clock": format_clock(t),
                               "tap": oltc.position if oltc is not None else None}
        for i, bus_id in enumerate(self.net.bus_ids):
            row[f"V.{bus_id}"] = float(solution.V[i])
        for i, bus_id in enumerate(self.net.bus_ids):
            row[f"delta.{bus_id}"] = float(solution.delta[i])
        limits = self.scenario.schedule.limits_at(t)
        for branch_id in self.net.branch_ids:
            row[f"S.{branch_id}"] = solution.loading(branch_id)
            row[f"S_max.{branch_id}"] = limits.get(branch_id)
        for asset_id in sorted(powers):
            row[f"P.{asset_id}"] = powers[asset_id]["P"]
            row[f"Q.{asset_id}"] = powers[asset_id]["Q"]
        for asset_id, asset in sorted(self.assets.items()):
            bank = self.banks[asset_id]
            if isinstance(asset, PVModel):
                row[f"P_AVAIL.{asset_id}"] = powers[asset_id]["available"]
                row[f"P_SET.{asset_id}"] = bank.get("P_SET")
                row[f"Q_SET.{asset_id}"] = bank.get("Q_SET")
                row[f"CAP.{asset_id}"] = int(bank.get("P_LIMIT_ENABLE"))
            elif isinstance(asset, BatteryModel):
                row[f"P_SET.{asset_id}"] = bank.get("P_SET")
                row[f"Q_SET.{asset_id}"] = bank.get("Q_SET")
                row[f"SOC.{asset_id}"] = asset.e_t0
            elif isinstance(asset, EVModel):
                row[f"I_SET.{asset_id}"] = powers[asset_id]["I"]
        return row

    def snapshot(self) -> Dict[str, Dict[str, float]]:
        """Decoded registers of every bank."""
        return {asset_id: bank.snapshot() for asset_id, bank in sorted(self.banks.items())}

    def bank_list(self) -> List[RegisterBank]:
        return [self.banks[k] for k in sorted(self.banks)]
