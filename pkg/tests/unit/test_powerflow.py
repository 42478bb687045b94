#!/usr/bin/env python3
"""
Unit tests for the Newton-Raphson power flow and its derivatives.
"""
import unittest
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path for importing
sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

from core.errors import DivergenceError, InputError
from network import apply_tap, build_admittance, network_from_dict
from powerflow import InjectionSpec, branch_flows, complex_voltage, power_flow_jacobian, solve_pf
from tests.oracles import (finite_difference_jacobian, gauss_seidel_pf, random_radial_network,
                           two_bus_network, two_bus_sending_power, two_bus_voltage)

R_OHM, X_OHM = 0.16, 0.08


class TestTwoBusClosedForm(unittest.TestCase):
    """Compare against the analytic receiving-end voltage of a single line."""

    def test_voltage_matches_closed_form(self):
        net = two_bus_network(R_OHM, X_OHM)
        for p, q in [(10.0, 0.0), (40.0, 10.0), (25.0, -8.0), (-30.0, 5.0)]:
            with self.subTest(p=p, q=q):
                sol = solve_pf(net, InjectionSpec(p={"L": p}, q={"L": q}))
                self.assertTrue(sol.converged)
                self.assertAlmostEqual(sol.voltage("L"), two_bus_voltage(p, q, R_OHM, X_OHM), places=8)

    def test_flows_include_losses(self):
        net = two_bus_network(R_OHM, X_OHM)
        sol = solve_pf(net, InjectionSpec(p={"L": 40.0}, q={"L": 10.0}))
        expected = two_bus_sending_power(40.0, 10.0, R_OHM, X_OHM)
        self.assertAlmostEqual(sol.S_from[0].real, expected.real, places=5)
        self.assertAlmostEqual(sol.S_from[0].imag, expected.imag, places=5)
        self.assertAlmostEqual(sol.S_to[0].real, -40.0, places=5)
        self.assertAlmostEqual(sol.loading("L1"), abs(expected), places=5)

    def test_flat_profile_without_load(self):
        sol = solve_pf(two_bus_network(R_OHM, X_OHM), InjectionSpec())
        self.assertEqual(sol.iterations, 0)
        np.testing.assert_allclose(sol.V, 1.0)

    def test_slack_voltage(self):
        sol = solve_pf(two_bus_network(R_OHM, X_OHM), InjectionSpec(p={"L": 20.0}), slack_voltage=1.03)
        self.assertAlmostEqual(sol.voltage("S"), 1.03)
        self.assertAlmostEqual(sol.voltage("L"), two_bus_voltage(20.0, 0.0, R_OHM, X_OHM, v1=1.03), places=8)


class TestAgainstGaussSeidel(unittest.TestCase):
    """Random radial feeders solved by an independent Gauss-Seidel iteration."""

    def test_random_feeders(self):
        rng = np.random.default_rng(11)
        for trial in range(50):
            net = random_radial_network(rng, int(rng.integers(2, 7)))
            loads = {b: float(rng.uniform(-20.0, 30.0)) for b in net.bus_ids[1:]}
            reactive = {b: float(rng.uniform(-5.0, 5.0)) for b in net.bus_ids[1:]}
            with self.subTest(trial=trial):
                sol = solve_pf(net, InjectionSpec(p=loads, q=reactive))
                V = gauss_seidel_pf(net, loads, reactive)
                np.testing.assert_allclose(sol.V, np.abs(V), atol=1e-6)
                np.testing.assert_allclose(sol.delta, np.angle(V), atol=1e-6)

    def test_consumption_recovers_injections(self):
        net = random_radial_network(np.random.default_rng(2), 6)
        loads = {b: 5.0 * i for i, b in enumerate(net.bus_ids[1:], start=1)}
        sol = solve_pf(net, InjectionSpec(p=loads))
        consumption = sol.consumption()
        for bus_id, p in loads.items():
            self.assertAlmostEqual(consumption[net.bus_index(bus_id)].real, p, places=5)
            self.assertAlmostEqual(consumption[net.bus_index(bus_id)].imag, 0.0, places=5)

    def test_branch_flows_match_solution(self):
        net = random_radial_network(np.random.default_rng(8), 5)
        sol = solve_pf(net, InjectionSpec(p={b: 10.0 for b in net.bus_ids[1:]}))
        Sf, St = branch_flows(net, sol.V, sol.delta)
        np.testing.assert_allclose(Sf, sol.S_from)
        np.testing.assert_allclose(St, sol.S_to)


class TestJacobian(unittest.TestCase):
    """Analytic Jacobian against central differences."""

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(21)
        net = random_radial_network(rng, 6)
        Ybus = build_admittance(net)
        vm = rng.uniform(0.95, 1.05, net.n_bus)
        va = rng.uniform(-0.05, 0.05, net.n_bus)
        pq = np.arange(1, net.n_bus)
        J = power_flow_jacobian(Ybus, complex_voltage(vm, va), pq)
        np.testing.assert_allclose(J, finite_difference_jacobian(Ybus, vm, va, pq), rtol=1e-5, atol=1e-4)


class TestTaps(unittest.TestCase):
    """Tap position moves the LV voltage."""

    def setUp(self):
        self.net = network_from_dict({
            "buses": [{"id": "MV", "base_kv": 10.0, "kind": "slack"}, {"id": "LV", "base_kv": 0.4}],
            "branches": [{"id": "T1", "kind": "transformer", "from": "MV", "to": "LV",
                          "rated_kva": 250, "uk_percent": 4.0, "ur_percent": 1.2,
                          "tap": {"position": 5, "neutral": 5, "step": 0.025, "min": 4, "max": 9}}],
        })

    def test_no_load_voltage_follows_ratio(self):
        for tau in (4, 5, 6, 9):
            with self.subTest(tau=tau):
                sol = solve_pf(apply_tap(self.net, "T1", tau), InjectionSpec())
                self.assertAlmostEqual(sol.voltage("LV"), 1.0 + (tau - 5) * 0.025, places=9)

    def test_raising_tap_raises_loaded_voltage(self):
        inj = InjectionSpec(p={"LV": 150.0})
        low = solve_pf(self.net, inj).voltage("LV")
        high = solve_pf(apply_tap(self.net, "T1", 6), inj).voltage("LV")
        self.assertGreater(high, low)


class TestErrors(unittest.TestCase):
    """Test input validation and divergence reporting."""

    def test_slack_injection_rejected(self):
        with self.assertRaises(InputError):
            solve_pf(two_bus_network(R_OHM, X_OHM), InjectionSpec(p={"S": 5.0}))

    def test_unknown_bus_rejected(self):
        with self.assertRaises(InputError):
            solve_pf(two_bus_network(R_OHM, X_OHM), InjectionSpec(p={"nowhere": 5.0}))

    def test_non_positive_tolerance(self):
        with self.assertRaises(InputError):
            solve_pf(two_bus_network(R_OHM, X_OHM), InjectionSpec(), tol=0.0)

    def test_divergence_beyond_transfer_limit(self):
        with self.assertRaises(DivergenceError):
            solve_pf(two_bus_network(R_OHM, X_OHM), InjectionSpec(p={"L": 5000.0}), max_iter=20)


if __name__ == '__main__':
    unittest.main()
