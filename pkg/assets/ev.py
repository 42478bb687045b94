"""
EV charging station model.
"""
from dataclasses import dataclass

from core.errors import InputError
from .base import AssetModel


@dataclass(frozen=True)
class EVModel(AssetModel):
    i_min: int = 6  # A
    i_max: int = 16  # A
    connected: bool = False
    phases: int = 3

    def __post_init__(self):
        if not 0 < self.i_min <= self.i_max:
            raise InputError(f"EV {self.asset_id}: need 0 < I_min <= I_max, got {self.i_min}, {self.i_max}")
        if self.phases not in (1, 3):
            raise InputError(f"EV {self.asset_id}: phases must be 1 or 3")

    @property
    def kind(self) -> str:
        return "ev"

    @property
    def controllable(self) -> bool:
        return True

    def power(self, current: float, phase_voltage: float) -> float:
        """Charging power in kW for a per-phase current (A) and phase voltage (V)."""
        return self.phases * phase_voltage * current / 1000.0
