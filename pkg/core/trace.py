"""
Per-cycle run traces and their CSV form.

Columns: ``time_s``, ``clock``, ``tap``, ``decision`` plus dotted per-element
columns ``V.<bus>`` (p.u.), ``delta.<bus>`` (rad), ``S.<branch>`` (loading,
kVA), ``S_max.<branch>`` (kVA, empty when unlimited), ``P.<asset>``/``Q.<asset>``
(kW/kVar) and the register setpoints ``P_SET.<asset>``, ``Q_SET.<asset>``,
``CAP.<asset>``, ``I_SET.<asset>``, ``SOC.<asset>``.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List
import logging
import os

import numpy as np
import pandas as pd

from .errors import ConfigError, InputError
from .utils import PathLike

logger = logging.getLogger(__name__)

CONTROLLED = "controlled"
REFERENCE = "reference"
MODES = (CONTROLLED, REFERENCE)


def _elements(columns: List[str], prefix: str) -> List[str]:
    return [c[len(prefix) + 1:] for c in columns if c.startswith(prefix + ".")]


@dataclass
class RunTrace:
    """One run of a scenario, one row per cycle."""
    mode: str
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in MODES:
            raise InputError(f"unknown run mode {self.mode!r}; expected one of {MODES}")

    def append(self, row: Dict[str, Any]) -> None:
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    @property
    def frame(self) -> pd.DataFrame:
        return self.to_frame()

    @property
    def times(self) -> np.ndarray:
        return np.array([row["time_s"] for row in self.rows], dtype=float)

    @property
    def buses(self) -> List[str]:
        return _elements(list(self.rows[0]) if self.rows else [], "V")

    @property
    def branches(self) -> List[str]:
        return _elements(list(self.rows[0]) if self.rows else [], "S")

    def series(self, column: str) -> np.ndarray:
        """
        Raises:
            InputError: If the trace has no such column
        """
        if self.rows and column not in self.rows[0]:
            raise InputError(f"{self.mode} trace has no column {column!r}")
        return np.array([row[column] for row in self.rows], dtype=float)

    def voltage(self, bus_id: str) -> np.ndarray:
        return self.series(f"V.{bus_id}")

    def loading(self, branch_id: str) -> np.ndarray:
        return self.series(f"S.{branch_id}")

    def to_csv(self, path: PathLike) -> None:
        directory = os.path.dirname(os.fspath(path))
        if directory:
            os.makedirs(directory, exist_ok=True)
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path: PathLike, mode: str) -> "RunTrace":
        """
        Load a stored trace.

        Raises:
            ConfigError: If the file is missing or lacks ``time_s``
        """
        try:
            frame = pd.read_csv(path)
        except FileNotFoundError:
            raise ConfigError("trace file not found", source=str(path))
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ConfigError(f"unreadable trace: {e}", source=str(path))
        if "time_s" not in frame.columns:
            raise ConfigError("missing column time_s", source=str(path), field="header")
        frame = frame.astype(object).where(frame.notna(), None)
        return cls(mode=mode, rows=frame.to_dict(orient="records"))
