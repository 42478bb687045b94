"""
Uncontrollable resistive load.
"""
from dataclasses import dataclass

from core.errors import InputError
from .base import AssetModel


@dataclass(frozen=True)
class ResistiveLoad(AssetModel):
    """Controllable resistor of the test grid; follows its load series, Q = 0."""
    p_max: float = 200.0  # kW

    def __post_init__(self):
        if self.p_max <= 0:
            raise InputError(f"Load {self.asset_id}: p_max must be > 0")

    @property
    def kind(self) -> str:
        return "load"

    def demand(self, setpoint: float) -> float:
        """Consumed power in kW for a requested load, clamped to [0, p_max]."""
        return min(max(setpoint, 0.0), self.p_max)
