#!/usr/bin/env python3
"""
Unit tests for violation detection, the decision rule and dispatch.
"""
import unittest
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path for importing
sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

from assets import BatteryModel, EVModel, FlexibilitySet, GridContext, OLTCModel, PVModel, build_flexibility
from control import (OVER, UNDER, DispatchCommand, NoAction, RunOPF, TapStep, ViolationReport,
                     commands_from_setpoints, commands_from_targets, decide, detect_violations,
                     quantize_ev, tap_command, write_command)
from core.errors import InputError, TapLimitError
from estimation import SystemState
from powerflow import InjectionSpec, solve_pf
from transport import BSS_MAP, CS_MAP, OLTC_MAP, PV_MAP, InProcessPort, RegisterBank
from tests.oracles import two_bus_network


def state_at(t=0.0):
    net = two_bus_network(0.16, 0.08)
    return SystemState.from_voltages(net, np.array([1.0, 0.98]), np.zeros(2), timestamp=t)


def report(voltage=None, flow=None, t=0.0):
    voltage = voltage or {}
    return ViolationReport(timestamp=t,
                           voltage={b: abs(e) for b, e in voltage.items()},
                           voltage_direction={b: (OVER if e > 0 else UNDER) for b, e in voltage.items() if e},
                           flow=flow or {})


OLTC = OLTCModel("oltc1", "B007", branch="T1", position=5, neutral=5, step_voltage=0.025, limits=(4, 9))


class TestDecide(unittest.TestCase):
    """Truth table of the decision rule."""

    def test_clean_cycle(self):
        self.assertEqual(decide(state_at(), report({"L": 0.0}, {"L1": 0.0}), False, OLTC), NoAction())

    def test_flow_violation_runs_opf(self):
        action = decide(state_at(), report({"L": 0.02}, {"L1": 3.0}), False, OLTC)
        self.assertIsInstance(action, RunOPF)

    def test_over_voltage_steps_down(self):
        self.assertEqual(decide(state_at(), report({"L": 0.01}), False, OLTC), TapStep(-1))

    def test_under_voltage_steps_up(self):
        self.assertEqual(decide(state_at(), report({"L": -0.01}), False, OLTC), TapStep(1))

    def test_mixed_voltage_runs_opf(self):
        action = decide(state_at(), report({"L": 0.01, "M": -0.01}), False, OLTC)
        self.assertIsInstance(action, RunOPF)

    def test_no_consecutive_steps(self):
        action = decide(state_at(), report({"L": 0.01}), True, OLTC)
        self.assertIsInstance(action, RunOPF)

    def test_tap_limit(self):
        lowest = OLTCModel("oltc1", "B007", branch="T1", position=4, limits=(4, 9))
        action = decide(state_at(), report({"L": 0.01}), False, lowest)
        self.assertIsInstance(action, RunOPF)
        self.assertIn("limit", action.reason)

    def test_no_tap_changer(self):
        self.assertIsInstance(decide(state_at(), report({"L": 0.01}), False, None), RunOPF)

    def test_timestamp_mismatch(self):
        with self.assertRaises(InputError):
            decide(state_at(15.0), report({}, t=30.0), False, OLTC)

    def test_invalid_step(self):
        with self.assertRaises(InputError):
            TapStep(2)


class TestQuantizeEV(unittest.TestCase):
    """Integer current rounding of EV setpoints."""

    def test_rounds_down(self):
        # 8.1 kW at 230 V is 11.7 A
        self.assertEqual(quantize_ev(8.1, 230.0), 11)

    def test_exact_multiple(self):
        self.assertEqual(quantize_ev(3 * 230.0 * 16 / 1000.0, 230.0), 16)

    def test_clamped(self):
        self.assertEqual(quantize_ev(1.0, 230.0), 6)
        self.assertEqual(quantize_ev(50.0, 230.0), 16)

    def test_no_charging(self):
        self.assertIsNone(quantize_ev(0.0, 230.0))
        self.assertIsNone(quantize_ev(-2.0, 230.0))

    def test_realized_power_not_above_setpoint(self):
        for p in np.linspace(4.2, 11.0, 25):
            current = quantize_ev(float(p), 225.0)
            self.assertLessEqual(3 * 225.0 * current / 1000.0, p + 1e-9)

    def test_invalid_voltage(self):
        with self.assertRaises(InputError):
            quantize_ev(5.0, 0.0)


class TestViolations(unittest.TestCase):
    """Limit checks on an estimated state."""

    def setUp(self):
        self.net = two_bus_network(0.16, 0.08)
        pf = solve_pf(self.net, InjectionSpec(p={"L": 60.0}))
        self.state = SystemState.from_voltages(self.net, pf.V, pf.delta, timestamp=15.0)
        self.loading = pf.loading("L1")

    def test_flow_excess(self):
        result = detect_violations(self.state, {"L1": 50.0})
        self.assertAlmostEqual(result.flow["L1"], self.loading - 50.0, places=6)
        self.assertTrue(result.has_flow)
        self.assertEqual(result.timestamp, 15.0)

    def test_under_voltage(self):
        v = self.state.voltage("L")
        result = detect_violations(self.state, {}, voltage_band=(v + 0.01, 1.1))
        self.assertEqual(result.under_voltage, ("L",))
        self.assertAlmostEqual(result.voltage["L"], 0.01)

    def test_slack_not_monitored(self):
        result = detect_violations(self.state, {}, voltage_band=(1.01, 1.1))
        self.assertNotIn("S", result.voltage)

    def test_bus_band_override(self):
        result = detect_violations(self.state, {}, bus_bands={"L": (0.5, 0.6)})
        self.assertEqual(result.over_voltage, ("L",))

    def test_clean(self):
        result = detect_violations(self.state, {"L1": 500.0})
        self.assertTrue(result.clean)


class TestDispatch(unittest.TestCase):
    """Commands and their register writes."""

    def setUp(self):
        self.bss = build_flexibility(BatteryModel("bss1", "BSS", e_t0=40.0), GridContext(bss_horizon=1.0))
        self.pv = build_flexibility(PVModel("pv1", "PV"), GridContext(irradiance=800.0))
        self.ev = build_flexibility(EVModel("cs1", "CS", connected=True), GridContext())
        self.flex = FlexibilitySet((self.bss, self.pv, self.ev))
        self.banks = [RegisterBank("bss1", BSS_MAP), RegisterBank("pv1", PV_MAP),
                      RegisterBank("cs1", CS_MAP), RegisterBank("oltc1", OLTC_MAP)]
        self.port = InProcessPort(self.banks)

    def test_setpoints_clipped_and_quantized(self):
        commands = commands_from_setpoints(self.flex, {"bss1": (45.0, 2.0), "pv1": (-20.0, 0.0),
                                                       "cs1": (8.1, 0.0)}, {"cs1": 230.0})
        by_id = {c.asset_id: c for c in commands}
        self.assertEqual(by_id["bss1"].p_set, 30.0)
        self.assertEqual(by_id["pv1"].p_set, -20.0)
        self.assertFalse(by_id["pv1"].release_limit)
        self.assertEqual(by_id["cs1"].i_set, 11)

    def test_disconnected_ev_gets_no_command(self):
        ev = build_flexibility(EVModel("cs1", "CS", connected=False), GridContext())
        commands = commands_from_setpoints(FlexibilitySet((ev,)), {"cs1": (0.0, 0.0)}, {"cs1": 230.0})
        self.assertEqual(commands, [])

    def test_targets(self):
        by_id = {c.asset_id: c for c in commands_from_targets(self.flex, {"cs1": 230.0})}
        self.assertTrue(by_id["pv1"].release_limit)
        self.assertAlmostEqual(by_id["bss1"].p_set, 10.0)
        self.assertEqual(by_id["bss1"].q_set, 0.0)
        self.assertEqual(by_id["cs1"].i_set, 16)

    def test_write_commands(self):
        for command in commands_from_setpoints(self.flex, {"bss1": (-12.5, 3.0), "pv1": (-20.0, -1.5),
                                                           "cs1": (8.1, 0.0)}, {"cs1": 230.0}):
            write_command(self.port, command)
        write_command(self.port, tap_command(OLTC, 1))
        bss, pv, cs, oltc = self.banks
        self.assertAlmostEqual(bss.get("P_SET"), -12.5)
        self.assertAlmostEqual(bss.get("Q_SET"), 3.0)
        self.assertAlmostEqual(pv.get("P_SET"), -20.0)
        self.assertEqual(pv.get("P_LIMIT_ENABLE"), 1)
        self.assertEqual(cs.get("I_SET"), 11)
        self.assertEqual(oltc.get("TAP"), 6)

    def test_tap_command_at_limit(self):
        highest = OLTCModel("oltc1", "B007", branch="T1", position=9, limits=(4, 9))
        with self.assertRaises(TapLimitError):
            tap_command(highest, 1)

    def test_fractional_current_rejected(self):
        with self.assertRaises(InputError):
            DispatchCommand("cs1", "ev", i_set=7.5)


if __name__ == '__main__':
    unittest.main()
