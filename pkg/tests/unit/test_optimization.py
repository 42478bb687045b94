#!/usr/bin/env python3
"""
Unit tests for the curative OPF.
"""
import inspect
import unittest
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path for importing
sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

from assets import (DEFAULT_COSTS, BatteryModel, CostFactors, EVModel, FlexibilitySet, GridContext,
                    build_flexibility)
from config import Settings
from core.errors import ConfigError, InputError
from estimation import SystemState
from optimization import (INFEASIBLE, OPTIMAL, PRESOLVE, SUBOPTIMAL, OPFProblem, angle_bounds, assemble, solve)
from powerflow import InjectionSpec, solve_pf
from tests.oracles import two_bus_network, two_bus_redispatch_oracle

R_OHM, X_OHM = 0.16, 0.08
BASE_KW = 30.0


def battery_flex(e_t0=30.0, sin_phi_max=0.44):
    # 20 kW charging target over a one-hour horizon
    bss = BatteryModel("bss1", "L", s_max=30.0, e_total=100.0, e_t0=e_t0, sin_phi_max=sin_phi_max)
    return build_flexibility(bss, GridContext(bss_horizon=1.0))


def problem(flex, limit_kva, base_kw=BASE_KW, **kwargs):
    return OPFProblem(net=two_bus_network(R_OHM, X_OHM), base_injections=InjectionSpec(p={"L": base_kw}),
                      flex=FlexibilitySet(tuple(flex)), limits={"L1": limit_kva}, **kwargs)


class TestPresolve(unittest.TestCase):
    """Targets that violate nothing are returned without optimisation."""

    def test_targets_returned(self):
        flex = battery_flex()
        solution = solve(problem([flex], limit_kva=100.0))
        self.assertEqual(solution.status, OPTIMAL)
        self.assertEqual(solution.phase, PRESOLVE)
        self.assertAlmostEqual(solution.p_set("bss1"), 20.0)
        self.assertEqual(solution.q_set("bss1"), 0.0)
        self.assertAlmostEqual(solution.objective, 0.0)

    def test_target_clipped_to_bounds(self):
        ev = EVModel("cs1", "L", connected=True)
        flex = build_flexibility(ev, GridContext(voltage=1.0))
        solution = solve(problem([flex], limit_kva=100.0))
        self.assertEqual(solution.phase, PRESOLVE)
        self.assertAlmostEqual(solution.p_set("cs1"), 11.04)


class TestRedispatch(unittest.TestCase):
    """Congested two-bus line against the bisection/grid-search oracle."""

    def test_active_power_only(self):
        flex = battery_flex(sin_phi_max=0.0)
        solution = solve(problem([flex], limit_kva=40.0))
        expected, p_opt, _ = two_bus_redispatch_oracle(BASE_KW, R_OHM, X_OHM, 40.0, 20.0, (-30.0, 30.0),
                                                       0.0, DEFAULT_COSTS["bss"].c_p, DEFAULT_COSTS["bss"].c_q,
                                                       steps=3)
        self.assertIn(solution.status, (OPTIMAL, SUBOPTIMAL))
        self.assertAlmostEqual(solution.p_set("bss1"), p_opt, delta=0.01)
        self.assertLessEqual(abs(solution.objective - expected), 1e-3 * expected)

    def test_with_reactive_power(self):
        flex = battery_flex()
        solution = solve(problem([flex], limit_kva=40.0))
        expected, p_opt, q_opt = two_bus_redispatch_oracle(BASE_KW, R_OHM, X_OHM, 40.0, 20.0, (-30.0, 30.0),
                                                           13.2, DEFAULT_COSTS["bss"].c_p,
                                                           DEFAULT_COSTS["bss"].c_q)
        self.assertIn(solution.status, (OPTIMAL, SUBOPTIMAL))
        self.assertLessEqual(abs(solution.objective - expected), 1e-3 * expected)
        self.assertAlmostEqual(solution.p_set("bss1"), p_opt, delta=0.05)

    def test_limits_respected(self):
        solution = solve(problem([battery_flex()], limit_kva=40.0))
        self.assertLessEqual(solution.loading["L1"], 40.0 + 1e-2)
        self.assertLessEqual(solution.feasibility.equality, 1e-6)
        self.assertLessEqual(solution.feasibility.inequality(), 1e-4)
        low, high = 0.9, 1.1
        self.assertTrue(np.all((solution.V >= low - 1e-4) & (solution.V <= high + 1e-4)))

    def test_cheapest_flexibility_moves_first(self):
        bss = battery_flex()
        ev = build_flexibility(EVModel("cs1", "L", connected=True), GridContext(voltage=1.0))
        solution = solve(problem([bss, ev], limit_kva=55.0))
        bss_shift = abs(solution.p_set("bss1") - bss.p_target)
        ev_shift = abs(solution.p_set("cs1") - ev.p_target)
        self.assertGreater(bss_shift, 1.0)
        self.assertLess(ev_shift, bss_shift / 10.0)
        self.assertEqual(solution.q_set("cs1"), 0.0)

    def test_costlier_flexibility_moves_less(self):
        """Raising the EV's c_P never deepens its curtailment."""
        ev_model = EVModel("cs1", "L", connected=True)
        for limit in (50.0, 55.0, 60.0):
            depths = []
            for c_p in (10.0, 100.0, 1000.0, 10000.0, 100000.0):
                ev = build_flexibility(ev_model, GridContext(voltage=1.0), costs=CostFactors(c_p, 1.0))
                solution = solve(problem([battery_flex(), ev], limit_kva=limit))
                self.assertIn(solution.status, (OPTIMAL, SUBOPTIMAL))
                depths.append(ev.p_target - solution.p_set("cs1"))
            with self.subTest(limit=limit, depths=depths):
                for cheaper, costlier in zip(depths, depths[1:]):
                    self.assertLessEqual(costlier, cheaper + 0.05)

    def test_iteration_cap(self):
        """The cap counts trust-constr steps and defaults to the settings value."""
        default = inspect.signature(solve).parameters["max_iter"].default
        self.assertEqual(default, Settings().optimization.max_iter)
        solution = solve(problem([battery_flex()], limit_kva=40.0), max_iter=5)
        self.assertLessEqual(solution.iterations, 5)

    def test_state_from_power_flow(self):
        """Reported voltages are those of a power flow at the returned setpoints."""
        solution = solve(problem([battery_flex()], limit_kva=40.0))
        p, q = solution.setpoints["bss1"]
        pf = solve_pf(two_bus_network(R_OHM, X_OHM), InjectionSpec(p={"L": BASE_KW + p}, q={"L": q}))
        np.testing.assert_allclose(solution.V, pf.V, atol=1e-8)

    def test_infeasible_returns_least_violation(self):
        solution = solve(problem([battery_flex()], limit_kva=40.0, base_kw=80.0))
        self.assertEqual(solution.status, INFEASIBLE)
        self.assertGreater(solution.feasibility.flow, 1e-4)
        self.assertLess(solution.p_set("bss1"), -25.0)


class TestProblem(unittest.TestCase):
    """Test problem validation and assembly from an estimated state."""

    def test_unknown_limit_branch(self):
        with self.assertRaises(ConfigError):
            OPFProblem(net=two_bus_network(R_OHM, X_OHM), base_injections=InjectionSpec(),
                       flex=FlexibilitySet(), limits={"L9": 10.0})

    def test_non_positive_limit(self):
        with self.assertRaises(ConfigError):
            problem([battery_flex()], limit_kva=0.0)

    def test_inverted_band(self):
        with self.assertRaises(InputError):
            problem([battery_flex()], limit_kva=40.0, voltage_band=(1.1, 0.9))

    def test_flexibility_at_slack(self):
        bss = BatteryModel("bss1", "S")
        with self.assertRaises(ConfigError):
            problem([build_flexibility(bss, GridContext())], limit_kva=40.0)

    def test_angle_bounds_full_turn(self):
        low, high = angle_bounds()
        self.assertAlmostEqual(low, -2.0 * np.pi)
        self.assertAlmostEqual(high, 2.0 * np.pi)

    def test_assemble_removes_flexibility_power(self):
        net = two_bus_network(R_OHM, X_OHM)
        pf = solve_pf(net, InjectionSpec(p={"L": BASE_KW + 20.0}, q={"L": 3.0}))
        state = SystemState.from_voltages(net, pf.V, pf.delta, timestamp=60.0)
        flex = FlexibilitySet((battery_flex(),))
        built = assemble(net, state, flex, {"L1": 40.0}, measured={"bss1": (20.0, 3.0)})
        self.assertAlmostEqual(built.base_injections.p["L"], BASE_KW, places=5)
        self.assertAlmostEqual(built.base_injections.q["L"], 0.0, places=5)
        self.assertEqual(built.timestamp, 60.0)
        self.assertNotIn("S", built.base_injections.p)


if __name__ == '__main__':
    unittest.main()
