"""
Flexibility bounds, targets and the FlexibilitySet handed to the OPF.

All powers are kW/kVar in the consumer counting system.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple
import logging

from core.errors import ConfigError, InputError
from .base import AssetModel
from .battery import BatteryModel, bss_target_power
from .ev import EVModel
from .pv import PVModel, pv_available_power

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PowerBounds:
    p_min: float
    p_max: float
    q_min: float
    q_max: float

    def __post_init__(self):
        if self.p_min > self.p_max or self.q_min > self.q_max:
            raise InputError(f"Unordered bounds {self.as_tuple()}")

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.p_min, self.p_max, self.q_min, self.q_max)

    def contains(self, p: float, q: float, tol: float = 1e-9) -> bool:
        return (self.p_min - tol <= p <= self.p_max + tol
                and self.q_min - tol <= q <= self.q_max + tol)

    def clip(self, p: float, q: float) -> Tuple[float, float]:
        return (min(max(p, self.p_min), self.p_max), min(max(q, self.q_min), self.q_max))


@dataclass(frozen=True)
class GridContext:
    """Exogenous readings the bounds and targets depend on."""
    irradiance: float = 0.0  # W/m^2
    temperature: float = 25.0  # degC
    voltage: Optional[float] = None  # p.u. at the asset bus, None before the first estimate
    nominal_phase_voltage: float = 230.0  # V
    pv_headroom: float = 1.1
    bss_horizon: float = 1.0  # h
    bss_target_literal: bool = False

    @property
    def phase_voltage(self) -> float:
        if self.voltage is None:
            return self.nominal_phase_voltage
        return self.voltage * self.nominal_phase_voltage


def flexibility_bounds(asset: AssetModel, context: GridContext) -> PowerBounds:
    """
    P/Q box of a flexibility.

    BSS: P in [-S_max, S_max], Q in +-S_max sin(phi).
    PV: P in [-P_available, 0], Q in +-S_max sin(phi).
    EV: P in 3 V_CS [I_min, I_max] and Q = 0 when connected, all zero otherwise.

    Raises:
        InputError: If the asset is not a flexibility
    """
    if isinstance(asset, BatteryModel):
        q = asset.s_max * asset.sin_phi_max
        return PowerBounds(-asset.s_max, asset.s_max, -q, q)
    if isinstance(asset, PVModel):
        available = pv_available_power(asset, context.irradiance, context.temperature,
                                       context.pv_headroom)
        q = asset.s_max * asset.sin_phi_max
        return PowerBounds(-available, 0.0, -q, q)
    if isinstance(asset, EVModel):
        if not asset.connected:
            return PowerBounds(0.0, 0.0, 0.0, 0.0)
        v = context.phase_voltage
        return PowerBounds(asset.power(asset.i_min, v), asset.power(asset.i_max, v), 0.0, 0.0)
    raise InputError(f"{asset} is not a flexibility")


def target_power(asset: AssetModel, context: GridContext) -> float:
    """
    Unconstrained preferred active power of a flexibility.

    BSS: SoC regulation towards 50 %; PV: all available power; EV: maximum
    charging power when connected, 0 otherwise.
    """
    if isinstance(asset, BatteryModel):
        return bss_target_power(asset, context.bss_horizon, literal=context.bss_target_literal)
    if isinstance(asset, PVModel):
        return -pv_available_power(asset, context.irradiance, context.temperature, context.pv_headroom)
    if isinstance(asset, EVModel):
        if not asset.connected:
            return 0.0
        return asset.power(asset.i_max, context.phase_voltage)
    raise InputError(f"{asset} is not a flexibility")


@dataclass(frozen=True)
class CostFactors:
    c_p: float
    c_q: float

    def __post_init__(self):
        if self.c_p <= 0 or self.c_q <= 0:
            raise ConfigError(f"cost factors must be > 0, got ({self.c_p}, {self.c_q})")

    def scaled(self, factor: float) -> "CostFactors":
        return CostFactors(self.c_p * factor, self.c_q * factor)


# BSS cheapest, PV curtailment before EV; EV Q is pinned by its bounds
DEFAULT_COSTS: Dict[str, CostFactors] = {
    "bss": CostFactors(100.0, 1.0),
    "pv": CostFactors(1000.0, 10.0),
    "ev": CostFactors(10000.0, 1.0),
}


@dataclass(frozen=True)
class Flexibility:
    asset: AssetModel
    costs: CostFactors
    p_target: float
    bounds: PowerBounds

    @property
    def asset_id(self) -> str:
        return self.asset.asset_id

    @property
    def bus(self) -> str:
        return self.asset.bus

    @property
    def kind(self) -> str:
        return self.asset.kind

    def clipped_target(self) -> float:
        return self.bounds.clip(self.p_target, 0.0)[0]

    def to_dict(self) -> Dict[str, Any]:
        return {"asset_id": self.asset_id, "kind": self.kind, "bus": self.bus,
                "c_p": self.costs.c_p, "c_q": self.costs.c_q, "p_target": self.p_target,
                "bounds": list(self.bounds.as_tuple())}


@dataclass(frozen=True)
class FlexibilitySet:
    items: Tuple[Flexibility, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        ids = [f.asset_id for f in self.items]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate flexibility ids {ids}")

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Flexibility]:
        return iter(self.items)

    def get(self, asset_id: str) -> Flexibility:
        for flex in self.items:
            if flex.asset_id == asset_id:
                return flex
        raise KeyError(asset_id)

    def with_costs(self, factor: float) -> "FlexibilitySet":
        return FlexibilitySet(tuple(Flexibility(f.asset, f.costs.scaled(factor), f.p_target, f.bounds)
                                    for f in self.items))

    def to_dict(self) -> List[Dict[str, Any]]:
        return [f.to_dict() for f in self.items]


def build_flexibility(asset: AssetModel, context: GridContext,
                      costs: Optional[CostFactors] = None) -> Flexibility:
    """Bundle an asset with its bounds, target and cost factors for the current cycle."""
    costs = costs or DEFAULT_COSTS[asset.kind]
    return Flexibility(asset=asset, costs=costs, p_target=target_power(asset, context),
                       bounds=flexibility_bounds(asset, context))
