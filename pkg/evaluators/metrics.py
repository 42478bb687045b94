"""
Target metrics of a controlled/reference experiment.

Per monitored bus: N_v (cycles with a persistent voltage violation) and A_v
(p.u.); per monitored branch: N_s and A_s (kVA). ``A`` sums the deviation of
the scored run from the other run over flagged cycles; ``A_excess`` sums the
distance beyond the limit and is available for a single run as well.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence
import logging

import numpy as np
import pandas as pd

from core.errors import InputError
from core.trace import CONTROLLED, REFERENCE, RunTrace
from scenarios.base import LimitSchedule
from .base import check_aligned, persistent
from .flow import FlowEvaluator
from .voltage import VoltageEvaluator

logger = logging.getLogger(__name__)


def violation_series(trace: RunTrace, schedule: LimitSchedule,
                     monitored_buses: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Per-cycle persistent violation flags of one trace.

    Args:
        trace: Run trace with at least two cycles
        schedule: Limits active at each cycle
        monitored_buses: Buses to check (every bus in the trace when omitted)

    Returns:
        DataFrame indexed by ``time_s`` with class flags ``n_v``/``n_s`` (a
        violation of the class at both t-1 and t) and element flags
        ``n_v.<bus>``/``n_s.<branch>``

    Raises:
        InputError: If the trace has fewer than two cycles
    """
    if len(trace) < 2:
        raise InputError(f"{trace.mode} trace needs at least two cycles, has {len(trace)}")
    voltage = VoltageEvaluator(monitored_buses)
    flow = FlowEvaluator()
    columns: Dict[str, np.ndarray] = {}
    any_v = np.zeros(len(trace), dtype=bool)
    any_s = np.zeros(len(trace), dtype=bool)
    for bus in voltage.elements(trace, schedule):
        raw = voltage.excess(trace, schedule, bus) > 0
        any_v |= raw
        columns[f"n_v.{bus}"] = persistent(raw)
    for branch in flow.elements(trace, schedule):
        raw = flow.excess(trace, schedule, branch) > 0
        any_s |= raw
        columns[f"n_s.{branch}"] = persistent(raw)
    frame = pd.DataFrame({"n_v": persistent(any_v), "n_s": persistent(any_s), **columns},
                         index=pd.Index(trace.times, name="time_s"))
    return frame


def _reduction(reference: float, controlled: float) -> Optional[float]:
    if reference <= 0:
        return None
    return 100.0 * (reference - controlled) / reference


@dataclass
class MetricsReport:
    """
    Target metrics per run and element.

    ``nodes[bus][mode]`` holds N_v, A_v_excess and, for paired runs, A_v;
    ``branches[branch][mode]`` likewise with N_s/A_s. Reductions are derived
    on demand.
    """
    nodes: Dict[str, Dict[str, Dict[str, float]]] = field(default_factory=dict)
    branches: Dict[str, Dict[str, Dict[str, float]]] = field(default_factory=dict)
    cycles: int = 0

    @property
    def modes(self):
        seen = set()
        for table in (self.nodes, self.branches):
            for per_mode in table.values():
                seen.update(per_mode)
        return sorted(seen)

    @property
    def paired(self) -> bool:
        return CONTROLLED in self.modes and REFERENCE in self.modes

    def totals(self, mode: str) -> Dict[str, float]:
        """Class totals of one run, summed over elements."""
        result: Dict[str, float] = {}
        for table in (self.nodes, self.branches):
            for per_mode in table.values():
                for key, value in per_mode.get(mode, {}).items():
                    result[key] = result.get(key, 0) + value
        return result

    def reductions(self) -> Dict[str, Dict[str, Optional[float]]]:
        """Percentage reduction, controlled vs reference, per element and metric."""
        if not self.paired:
            return {}
        result: Dict[str, Dict[str, Optional[float]]] = {}
        for table in (self.nodes, self.branches):
            for element, per_mode in table.items():
                result[element] = {key: _reduction(per_mode[REFERENCE][key], per_mode[CONTROLLED][key])
                                   for key in per_mode[CONTROLLED]}
        return result

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "cycles": self.cycles,
            "nodes": self.nodes,
            "branches": self.branches,
            "totals": {mode: self.totals(mode) for mode in self.modes},
        }
        if self.paired:
            data["reductions"] = self.reductions()
        return data

    def to_frame(self) -> pd.DataFrame:
        """One row per element and metric, one column per run."""
        rows = []
        for kind, table in (("node", self.nodes), ("branch", self.branches)):
            for element, per_mode in table.items():
                for key in sorted(next(iter(per_mode.values()))):
                    row = {"kind": kind, "element": element, "metric": key}
                    for mode, values in per_mode.items():
                        row[mode] = values[key]
                    if self.paired:
                        row["reduction_pct"] = _reduction(per_mode[REFERENCE][key], per_mode[CONTROLLED][key])
                    rows.append(row)
        return pd.DataFrame(rows)


def compute_metrics(controlled: Optional[RunTrace],
                    reference: Optional[RunTrace],
                    schedule: LimitSchedule,
                    monitored_buses: Optional[Sequence[str]] = None) -> MetricsReport:
    """
    Compute target metrics for one or both runs of an experiment.

    Each run is scored with its own flags. With both traces, ``A`` of a run
    sums |x_run - x_other| over the run's flagged cycles.

    Args:
        controlled: Controlled-run trace (or None)
        reference: Reference-run trace (or None)
        schedule: Limits active at each cycle
        monitored_buses: Buses to score (every bus when omitted)

    Raises:
        InputError: If no trace is given or the traces do not share timestamps
    """
    runs = {mode: trace for mode, trace in ((CONTROLLED, controlled), (REFERENCE, reference))
            if trace is not None}
    if not runs:
        raise InputError("compute_metrics needs at least one trace")
    if len(runs) == 2:
        check_aligned(controlled, reference)
    others = {CONTROLLED: reference, REFERENCE: controlled}

    report = MetricsReport(cycles=len(next(iter(runs.values()))))
    for evaluator, table in ((VoltageEvaluator(monitored_buses), report.nodes), (FlowEvaluator(), report.branches)):
        for mode, trace in runs.items():
            for element in evaluator.elements(trace, schedule):
                table.setdefault(element, {})[mode] = evaluator.evaluate(trace, schedule, element,
                                                                         counterpart=others[mode])
    for mode in runs:
        totals = report.totals(mode)
        logger.info("%s: N_v=%d N_s=%d", mode, totals.get("N_v", 0), totals.get("N_s", 0))
    return report
