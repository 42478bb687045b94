"""
On-load tap changer view of a transformer branch.
"""
from dataclasses import dataclass, replace
from typing import Tuple

from core.errors import TapLimitError
from network.base import Branch
from .base import AssetModel


@dataclass(frozen=True)
class OLTCModel(AssetModel):
    """``bus`` is the LV bus; ``branch`` is the transformer the taps act on."""
    branch: str = ""
    position: int = 0
    neutral: int = 0
    step_voltage: float = 0.0  # p.u. per step
    limits: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        object.__setattr__(self, "limits", tuple(self.limits))
        low, high = self.limits
        if not low <= self.position <= high:
            raise TapLimitError(f"OLTC {self.asset_id}: tap {self.position} outside [{low}, {high}]")

    @property
    def kind(self) -> str:
        return "oltc"

    @classmethod
    def from_branch(cls, asset_id: str, branch: Branch) -> "OLTCModel":
        return cls(asset_id=asset_id, bus=branch.to_bus, branch=branch.id,
                   position=branch.tap_position, neutral=branch.tap_neutral,
                   step_voltage=branch.tap_step_voltage, limits=tuple(branch.tap_limits))

    def can_step(self, direction: int) -> bool:
        low, high = self.limits
        return low <= self.position + direction <= high

    def stepped(self, direction: int) -> "OLTCModel":
        if not self.can_step(direction):
            raise TapLimitError(f"OLTC {self.asset_id}: cannot step {direction:+d} from {self.position}")
        return replace(self, position=self.position + direction)
