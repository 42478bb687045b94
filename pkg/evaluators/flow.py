"""
Branch flow limit evaluator.
"""
from typing import List

import numpy as np

from core.trace import RunTrace
from scenarios.base import LimitSchedule
from .base import BaseEvaluator


class FlowEvaluator(BaseEvaluator):
    """
    Scores branch loading against the limit active at each step.

    Only branches with a schedule are monitored. A step where the schedule has
    a gap carries no limit.
    """

    count_key = "N_s"
    area_key = "A_s"

    def __init__(self):
        super().__init__(name="flow")

    def elements(self, trace: RunTrace, schedule: LimitSchedule) -> List[str]:
        available = set(trace.branches)
        return [b for b in schedule.branches if b in available]

    def values(self, trace: RunTrace, element: str) -> np.ndarray:
        return trace.loading(element)

    def limits(self, trace: RunTrace, schedule: LimitSchedule, element: str) -> np.ndarray:
        return np.array([schedule.limits_at(t).get(element, np.inf) for t in trace.times], dtype=float)

    def excess(self, trace: RunTrace, schedule: LimitSchedule, element: str) -> np.ndarray:
        return np.maximum(self.values(trace, element) - self.limits(trace, schedule, element), 0.0)
