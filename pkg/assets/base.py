"""
Base class for asset models.

Models are immutable values; anything that changes over a run (SoC, plug
state, tap position) is produced as a new instance by the caller.
"""
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from typing import Any, Dict


@dataclass(frozen=True)
class AssetModel(ABC):
    """Common fields of every asset connected to the grid."""
    asset_id: str
    bus: str

    @property
    @abstractmethod
    def kind(self) -> str:
        """Registry key of the asset type."""
        pass

    @property
    def controllable(self) -> bool:
        """Whether the OPF may move this asset's P/Q."""
        return False

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["kind"] = self.kind
        return data

    def __str__(self) -> str:
        return f"{self.kind}:{self.asset_id}@{self.bus}"
