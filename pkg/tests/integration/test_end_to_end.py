#!/usr/bin/env python3
"""
End-to-end test of the shipped scenario in both run modes.
"""
import os
import shutil
import tempfile
import unittest
from unittest import mock
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path for importing
sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

import core.simulator
from core.errors import DivergenceError
from core.pipeline import ExperimentPipeline
from core.runner import DIVERGED, ScenarioRunner
from core.trace import CONTROLLED, REFERENCE
from core.utils import load_json_file
from evaluators import violation_series
from scenarios import get_scenario


class TestShippedScenario(unittest.TestCase):
    """Controlled and reference runs of the shipped scenario."""

    @classmethod
    def setUpClass(cls):
        cls.output_dir = tempfile.mkdtemp()
        cls.scenario = get_scenario("sgtl")
        cls.pipeline = ExperimentPipeline(cls.scenario, output_dir=cls.output_dir, parallel=False)
        cls.results = cls.pipeline.run()
        cls.controlled = cls.results["traces"][CONTROLLED]
        cls.reference = cls.results["traces"][REFERENCE]
        cls.metrics = cls.results["metrics"]

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.output_dir)

    def test_one_row_per_cycle(self):
        self.assertEqual(len(self.controlled), 44)
        self.assertEqual(len(self.reference), 44)
        np.testing.assert_array_equal(self.controlled.times, self.reference.times)

    def test_reference_violates_transformer_limit(self):
        flags = violation_series(self.reference, self.scenario.schedule)
        window = flags.loc[240.0:300.0, "n_s.T1"]
        self.assertTrue((window == 1).all(), window)
        self.assertGreater(self.metrics.totals(REFERENCE)["N_s"], 0)

    def test_reference_applies_no_control(self):
        self.assertTrue(all(row["decision"] is None for row in self.reference.rows))
        self.assertEqual({row["tap"] for row in self.reference.rows}, {5})

    def test_control_reduces_flow_violations(self):
        controlled = self.metrics.totals(CONTROLLED)
        reference = self.metrics.totals(REFERENCE)
        self.assertLess(controlled["A_s_excess"], reference["A_s_excess"])
        self.assertLessEqual(controlled["N_s"], reference["N_s"])
        self.assertLessEqual(controlled["A_v_excess"], reference["A_v_excess"])

    def test_no_consecutive_tap_steps(self):
        decisions = [row["decision"] for row in self.controlled.rows]
        for previous, current in zip(decisions, decisions[1:]):
            self.assertFalse(previous == current == "tap-step")

    def test_tap_follows_decisions(self):
        rows = self.controlled.rows
        for row, following in zip(rows, rows[1:]):
            if row["decision"] == "tap-step":
                self.assertEqual(abs(following["tap"] - row["tap"]), 1)
            else:
                self.assertEqual(following["tap"], row["tap"])
        taps = [row["tap"] for row in rows]
        self.assertGreaterEqual(min(taps), 4)
        self.assertLessEqual(max(taps), 9)

    def test_ev_currents_are_integer(self):
        for row in self.controlled.rows:
            current = row["I_SET.CS"]
            self.assertEqual(current, int(current))
            if current:
                self.assertTrue(6 <= current <= 16)

    def test_metrics_consistent(self):
        for table in (self.metrics.nodes, self.metrics.branches):
            for per_mode in table.values():
                for values in per_mode.values():
                    for key, value in values.items():
                        self.assertGreaterEqual(value, 0.0, key)
                    count = next(v for k, v in values.items() if k.startswith("N_"))
                    if count == 0:
                        self.assertTrue(all(v == 0 for v in values.values()))

    def test_artifacts(self):
        for name in ("trace_controlled.csv", "trace_reference.csv", "cycles_controlled.jsonl",
                     "metrics.json", "comparison.csv", "metrics.md"):
            self.assertTrue(os.path.isfile(os.path.join(self.output_dir, name)), name)
        saved = load_json_file(os.path.join(self.output_dir, "metrics.json"))
        self.assertEqual(saved["cycles"], 44)
        self.assertIn("reductions", saved)
        with open(os.path.join(self.output_dir, "cycles_controlled.jsonl"), encoding="utf-8") as f:
            self.assertEqual(sum(1 for _ in f), 44)

    def test_deterministic(self):
        again = ScenarioRunner(self.scenario, mode=REFERENCE).run()
        self.assertEqual(again.rows, self.reference.rows)


class TestPowerFlowDivergence(unittest.TestCase):
    """A diverged cycle repeats the last converged state and the run goes on."""

    def run_with_failures(self, failing_calls, mode=REFERENCE):
        real_solve = core.simulator.solve_pf
        calls = {"count": 0}

        def flaky_solve(*args, **kwargs):
            calls["count"] += 1
            if calls["count"] in failing_calls:
                raise DivergenceError("no convergence", mismatch=1.0, iterations=30)
            return real_solve(*args, **kwargs)

        with mock.patch("core.simulator.solve_pf", side_effect=flaky_solve):
            return ScenarioRunner(get_scenario("sgtl"), mode=mode).run()

    def test_reference_run_completes(self):
        scenario = get_scenario("sgtl")
        trace = self.run_with_failures({3})
        self.assertEqual(len(trace), 44)
        diverged = trace.rows[2]
        self.assertEqual(diverged["decision"], DIVERGED)
        self.assertEqual(diverged["time_s"], scenario.steps[2])
        previous = trace.rows[1]
        for bus_id in trace.buses:
            self.assertEqual(diverged[f"V.{bus_id}"], previous[f"V.{bus_id}"])
        for branch_id in trace.branches:
            self.assertEqual(diverged[f"S.{branch_id}"], previous[f"S.{branch_id}"])
            self.assertEqual(diverged[f"S_max.{branch_id}"],
                             scenario.schedule.limits_at(scenario.steps[2]).get(branch_id))
        self.assertEqual([row["decision"] for row in trace.rows].count(DIVERGED), 1)
        self.assertIsNone(trace.rows[3]["decision"])

    def test_controlled_run_skips_control(self):
        trace = self.run_with_failures({20}, mode=CONTROLLED)
        self.assertEqual(len(trace), 44)
        decisions = [row["decision"] for row in trace.rows]
        self.assertEqual(decisions[19], DIVERGED)
        self.assertEqual(decisions.count(DIVERGED), 1)

    def test_first_cycle_divergence_raises(self):
        with self.assertRaises(DivergenceError):
            self.run_with_failures({1})


if __name__ == '__main__':
    unittest.main()
