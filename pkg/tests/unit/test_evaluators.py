#!/usr/bin/env python3
"""
Unit tests for the violation evaluators and target metrics.
"""
import unittest
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path for importing
sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

from core.errors import InputError
from core.trace import CONTROLLED, REFERENCE, RunTrace
from evaluators import (EVALUATOR_REGISTRY, FlowEvaluator, VoltageEvaluator, compute_metrics,
                        get_all_evaluators, get_evaluator, persistent, violation_series)
from scenarios import LimitInterval, LimitSchedule

SCHEDULE = LimitSchedule({"L1": (LimitInterval(0.0, float("inf"), 40.0),)})


def make_trace(mode, voltages, loadings):
    trace = RunTrace(mode)
    for k, (v, s) in enumerate(zip(voltages, loadings)):
        trace.append({"time_s": 15.0 * k, "V.B": v, "S.L1": s})
    return trace


def controlled_trace():
    # voltage above band at steps 1-2, loading above limit at steps 0-1 and 3
    return make_trace(CONTROLLED, [1.0, 1.12, 1.13, 1.0], [50.0, 50.0, 30.0, 45.0])


def reference_trace():
    return make_trace(REFERENCE, [1.0] * 4, [20.0] * 4)


class TestPersistence(unittest.TestCase):
    """A cycle counts only when the previous cycle was violated too."""

    def test_run_of_three(self):
        raw = np.zeros(8, dtype=bool)
        raw[[3, 4, 5]] = True
        self.assertEqual(persistent(raw).sum(), 2)
        self.assertEqual(list(np.nonzero(persistent(raw))[0]), [4, 5])

    def test_isolated_violations(self):
        self.assertEqual(persistent([True, False, True, False, True]).sum(), 0)

    def test_first_step_never_counts(self):
        self.assertEqual(persistent([True])[0], 0)
        self.assertEqual(len(persistent([])), 0)


class TestEvaluators(unittest.TestCase):
    """Per-element scoring on a hand-built trace."""

    def test_voltage(self):
        result = VoltageEvaluator().evaluate(controlled_trace(), SCHEDULE, "B")
        self.assertEqual(result["N_v"], 1)
        self.assertAlmostEqual(result["A_v_excess"], 0.03)
        self.assertNotIn("A_v", result)

    def test_flow(self):
        result = FlowEvaluator().evaluate(controlled_trace(), SCHEDULE, "L1")
        self.assertEqual(result["N_s"], 1)
        self.assertAlmostEqual(result["A_s_excess"], 10.0)

    def test_deviation_from_counterpart(self):
        result = FlowEvaluator().evaluate(controlled_trace(), SCHEDULE, "L1", counterpart=reference_trace())
        self.assertAlmostEqual(result["A_s"], 30.0)
        result = VoltageEvaluator().evaluate(controlled_trace(), SCHEDULE, "B", counterpart=reference_trace())
        self.assertAlmostEqual(result["A_v"], 0.13)

    def test_under_voltage(self):
        trace = make_trace(CONTROLLED, [0.88, 0.87, 0.95], [0.0] * 3)
        result = VoltageEvaluator().evaluate(trace, SCHEDULE, "B")
        self.assertEqual(result["N_v"], 1)
        self.assertAlmostEqual(result["A_v_excess"], 0.03)

    def test_bus_band_override(self):
        schedule = LimitSchedule(bus_bands={"B": (0.95, 1.2)})
        result = VoltageEvaluator().evaluate(controlled_trace(), schedule, "B")
        self.assertEqual(result["N_v"], 0)

    def test_schedule_gap_carries_no_limit(self):
        schedule = LimitSchedule({"L1": (LimitInterval(0.0, 15.0, 40.0),)})
        self.assertEqual(FlowEvaluator().evaluate(controlled_trace(), schedule, "L1")["N_s"], 0)

    def test_unscheduled_branch_not_monitored(self):
        self.assertEqual(FlowEvaluator().elements(controlled_trace(), LimitSchedule()), [])

    def test_misaligned_counterpart(self):
        short = make_trace(REFERENCE, [1.0] * 3, [20.0] * 3)
        with self.assertRaises(InputError):
            FlowEvaluator().evaluate(controlled_trace(), SCHEDULE, "L1", counterpart=short)

    def test_registry(self):
        self.assertEqual(set(EVALUATOR_REGISTRY), {"voltage", "flow"})
        self.assertIsInstance(get_evaluator("voltage", monitored=["B"]), VoltageEvaluator)
        self.assertEqual(len(get_all_evaluators()), 2)
        with self.assertRaises(ValueError):
            get_evaluator("harmonics")


class TestMetrics(unittest.TestCase):
    """Experiment-level metrics."""

    def test_paired_report(self):
        report = compute_metrics(controlled_trace(), reference_trace(), SCHEDULE)
        self.assertTrue(report.paired)
        self.assertEqual(report.cycles, 4)
        self.assertEqual(report.nodes["B"][CONTROLLED]["N_v"], 1)
        self.assertEqual(report.nodes["B"][REFERENCE]["N_v"], 0)
        self.assertAlmostEqual(report.branches["L1"][CONTROLLED]["A_s"], 30.0)
        self.assertEqual(report.branches["L1"][REFERENCE]["A_s"], 0.0)
        totals = report.totals(CONTROLLED)
        self.assertEqual(totals["N_v"], 1)
        self.assertEqual(totals["N_s"], 1)

    def test_identical_traces_have_zero_area(self):
        a = controlled_trace()
        b = RunTrace(REFERENCE, [dict(row) for row in a.rows])
        report = compute_metrics(a, b, SCHEDULE)
        self.assertEqual(report.nodes["B"][CONTROLLED]["A_v"], 0.0)
        self.assertEqual(report.branches["L1"][REFERENCE]["A_s"], 0.0)
        self.assertEqual(report.nodes["B"][CONTROLLED]["N_v"], report.nodes["B"][REFERENCE]["N_v"])

    def test_reductions(self):
        report = compute_metrics(reference_trace_as_controlled(), violating_reference(), SCHEDULE)
        reductions = report.reductions()
        self.assertEqual(reductions["L1"]["N_s"], 100.0)
        self.assertIsNone(reductions["B"]["N_v"])

    def test_single_run(self):
        report = compute_metrics(controlled_trace(), None, SCHEDULE)
        self.assertFalse(report.paired)
        self.assertNotIn("A_s", report.branches["L1"][CONTROLLED])
        self.assertNotIn("reductions", report.to_dict())

    def test_frame(self):
        frame = compute_metrics(controlled_trace(), reference_trace(), SCHEDULE).to_frame()
        row = frame[(frame.element == "L1") & (frame.metric == "N_s")].iloc[0]
        self.assertEqual(row[CONTROLLED], 1)
        self.assertEqual(row[REFERENCE], 0)

    def test_needs_a_trace(self):
        with self.assertRaises(InputError):
            compute_metrics(None, None, SCHEDULE)

    def test_violation_series(self):
        frame = violation_series(controlled_trace(), SCHEDULE)
        self.assertEqual(list(frame["n_v"]), [0, 0, 1, 0])
        self.assertEqual(list(frame["n_s"]), [0, 1, 0, 0])
        self.assertEqual(list(frame.index), [0.0, 15.0, 30.0, 45.0])
        self.assertIn("n_s.L1", frame.columns)

    def test_violation_series_needs_two_cycles(self):
        with self.assertRaises(InputError):
            violation_series(make_trace(CONTROLLED, [1.0], [1.0]), SCHEDULE)


def reference_trace_as_controlled():
    return make_trace(CONTROLLED, [1.0] * 4, [20.0] * 4)


def violating_reference():
    return make_trace(REFERENCE, [1.0] * 4, [50.0] * 4)


if __name__ == '__main__':
    unittest.main()
