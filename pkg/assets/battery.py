"""
Battery storage system (BSS) model.
"""
from dataclasses import dataclass, replace
from typing import Optional

from core.errors import InputError
from .base import AssetModel

SOC_TARGET_FRACTION = 0.5


@dataclass(frozen=True)
class BatteryModel(AssetModel):
    s_max: float = 30.0  # kVA
    e_total: float = 100.0  # kWh
    e_t0: float = 50.0  # kWh, current stored energy
    e_min: float = 0.0
    e_max: Optional[float] = None  # defaults to e_total
    sin_phi_max: float = 0.44

    def __post_init__(self):
        if self.e_max is None:
            object.__setattr__(self, "e_max", self.e_total)
        if self.s_max <= 0:
            raise InputError(f"BSS {self.asset_id}: s_max must be > 0")
        if not 0 <= self.e_min <= self.e_t0 <= self.e_max <= self.e_total:
            raise InputError(f"BSS {self.asset_id}: need E_min <= E_t0 <= E_max <= E_total, got "
                             f"{self.e_min}, {self.e_t0}, {self.e_max}, {self.e_total}")
        if not 0 <= self.sin_phi_max <= 1:
            raise InputError(f"BSS {self.asset_id}: sin_phi_max must be in [0, 1]")

    @property
    def kind(self) -> str:
        return "bss"

    @property
    def controllable(self) -> bool:
        return True

    @property
    def soc(self) -> float:
        """State of charge as a fraction of E_total."""
        return self.e_t0 / self.e_total


def bss_target_power(model: BatteryModel, delta_t: float, literal: bool = False) -> float:
    """
    Active-power target that drives the SoC towards 50 % of E_total.

    Charging below 50 %, discharging at or above it. The magnitude is
    |E_t0 - 0.5 E_total| / delta_t, or |E_t0 - E_total| / delta_t when
    ``literal`` is set, capped at S_max.

    Args:
        model: Battery
        delta_t: Horizon in hours
        literal: Use E_total instead of 0.5 E_total in the magnitude

    Returns:
        Target power in kW (consumer convention: charging positive)

    Raises:
        InputError: If delta_t <= 0
    """
    if delta_t <= 0:
        raise InputError(f"delta_t must be > 0, got {delta_t}")
    half = SOC_TARGET_FRACTION * model.e_total
    reference = model.e_total if literal else half
    magnitude = min(abs(model.e_t0 - reference) / delta_t, model.s_max)
    return magnitude if model.e_t0 < half else -magnitude


def bss_integrate_soc(model: BatteryModel, power: float, delta_t: float,
                      roundtrip_efficiency: float = 1.0) -> BatteryModel:
    """
    Advance the stored energy by ``power`` held for ``delta_t`` hours.

    Charging is scaled by sqrt(eta), discharging by 1/sqrt(eta); the result is
    clamped to [E_min, E_max].

    Returns:
        New BatteryModel
    """
    if not 0 < roundtrip_efficiency <= 1:
        raise InputError(f"roundtrip_efficiency must be in (0, 1], got {roundtrip_efficiency}")
    leg = roundtrip_efficiency ** 0.5
    factor = leg if power >= 0 else 1.0 / leg
    energy = model.e_t0 + power * delta_t * factor
    energy = min(max(energy, model.e_min), model.e_max)
    return replace(model, e_t0=energy)
