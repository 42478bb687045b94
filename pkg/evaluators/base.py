"""
Base class for per-element violation evaluators.
"""
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional

import numpy as np

from core.errors import InputError
from core.trace import RunTrace
from scenarios.base import LimitSchedule


def persistent(raw: np.ndarray) -> np.ndarray:
    """
    Persistence filter: n(t) = 1 iff a violation exists at both t-1 and t.

    The first step never counts, so the result has the input's length with a
    leading 0.
    """
    raw = np.asarray(raw, dtype=bool)
    flags = np.zeros(len(raw), dtype=int)
    if len(raw) > 1:
        flags[1:] = raw[1:] & raw[:-1]
    return flags


def check_aligned(trace: RunTrace, counterpart: RunTrace) -> None:
    """
    Raises:
        InputError: If the two traces do not share their timestamps
    """
    if len(trace) != len(counterpart) or not np.array_equal(trace.times, counterpart.times):
        raise InputError(f"{trace.mode} and {counterpart.mode} traces do not share timestamps")


class BaseEvaluator(ABC):
    """Base class for evaluators that score one class of violations per grid element."""

    #: Prefixes of the count and area metrics in reports, e.g. ``N_v``/``A_v``
    count_key = "N"
    area_key = "A"

    def __init__(self, name: str):
        """
        Initialize the evaluator.

        Args:
            name: Evaluator name
        """
        self.name = name

    @abstractmethod
    def elements(self, trace: RunTrace, schedule: LimitSchedule) -> List[str]:
        """Elements this evaluator monitors in ``trace``."""

    @abstractmethod
    def values(self, trace: RunTrace, element: str) -> np.ndarray:
        """Per-step value of the monitored quantity."""

    @abstractmethod
    def excess(self, trace: RunTrace, schedule: LimitSchedule, element: str) -> np.ndarray:
        """Per-step distance beyond the limit; 0 where the limit holds."""

    def flags(self, trace: RunTrace, schedule: LimitSchedule, element: str) -> np.ndarray:
        """Persistent violation flags n(t) of one element."""
        return persistent(self.excess(trace, schedule, element) > 0)

    def evaluate(self,
                 trace: RunTrace,
                 schedule: LimitSchedule,
                 element: str,
                 counterpart: Optional[RunTrace] = None) -> Dict[str, Any]:
        """
        Score one element of a trace.

        Args:
            trace: Trace being scored
            schedule: Limits active at each step
            element: Bus or branch id
            counterpart: Trace of the other mode; enables the deviation score

        Returns:
            ``N`` (persistent violation count), ``A_excess`` (summed excess over
            flagged steps) and, with a counterpart, ``A`` (summed deviation from
            the counterpart over flagged steps)
        """
        flags = self.flags(trace, schedule, element)
        excess = self.excess(trace, schedule, element)
        result: Dict[str, Any] = {
            self.count_key: int(flags.sum()),
            f"{self.area_key}_excess": float(np.sum(flags * excess)),
        }
        if counterpart is not None:
            check_aligned(trace, counterpart)
            deviation = np.abs(self.values(trace, element) - self.values(counterpart, element))
            result[self.area_key] = float(np.sum(flags * deviation))
        return result

    def get_metadata(self) -> Dict[str, Any]:
        return {"name": self.name, "count": self.count_key, "area": self.area_key}

    def __str__(self) -> str:
        return f"{self.name} ({self.count_key}, {self.area_key})"
