"""
Voltage band evaluator.
"""
from typing import List, Optional, Sequence

import numpy as np

from core.trace import RunTrace
from scenarios.base import LimitSchedule
from .base import BaseEvaluator


class VoltageEvaluator(BaseEvaluator):
    """
    Scores bus voltages against their band.

    Excess is the distance below the lower or above the upper band edge in p.u.
    """

    count_key = "N_v"
    area_key = "A_v"

    def __init__(self, monitored: Optional[Sequence[str]] = None):
        """
        Args:
            monitored: Buses to score; every bus in the trace when omitted
        """
        super().__init__(name="voltage")
        self.monitored = None if monitored is None else list(monitored)

    def elements(self, trace: RunTrace, schedule: LimitSchedule) -> List[str]:
        if self.monitored is not None:
            return list(self.monitored)
        return trace.buses

    def values(self, trace: RunTrace, element: str) -> np.ndarray:
        return trace.voltage(element)

    def excess(self, trace: RunTrace, schedule: LimitSchedule, element: str) -> np.ndarray:
        low, high = schedule.band(element)
        v = self.values(trace, element)
        return np.maximum(low - v, 0.0) + np.maximum(v - high, 0.0)
