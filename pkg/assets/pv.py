"""
PV inverter model: available power from irradiance and temperature.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

from core.errors import InputError
from .base import AssetModel

# weights of the 5, 10, 20, 30, 50 and 100 % partial-load points
EURO_WEIGHTS = (0.03, 0.06, 0.13, 0.10, 0.48, 0.20)


def european_efficiency(eta_5: float, eta_10: float, eta_20: float,
                        eta_30: float, eta_50: float, eta_100: float) -> float:
    """
    Weighted inverter efficiency over the European partial-load profile.

    Args:
        eta_5 ... eta_100: Efficiencies at 5, 10, 20, 30, 50 and 100 % of nominal power

    Returns:
        Weighted efficiency

    Raises:
        InputError: If any efficiency is outside (0, 1]
    """
    etas = (eta_5, eta_10, eta_20, eta_30, eta_50, eta_100)
    for eta in etas:
        if not 0 < eta <= 1:
            raise InputError(f"efficiency must be in (0, 1], got {eta}")
    return sum(w * eta for w, eta in zip(EURO_WEIGHTS, etas))


@dataclass(frozen=True)
class PVModel(AssetModel):
    p_ref: float = 60.0  # kW at E_ref, T_ref
    e_ref: float = 1000.0  # W/m^2
    t_ref: float = 25.0  # degC
    alpha: float = 0.00273  # 1/K
    eta_inverter: float = 0.93
    sin_phi_max: float = 0.44
    s_max: Optional[float] = None  # kVA, defaults to p_ref

    def __post_init__(self):
        if self.s_max is None:
            object.__setattr__(self, "s_max", self.p_ref)
        if self.p_ref <= 0:
            raise InputError(f"PV {self.asset_id}: p_ref must be > 0")
        if not 0 < self.eta_inverter <= 1:
            raise InputError(f"PV {self.asset_id}: eta_inverter must be in (0, 1]")

    @property
    def kind(self) -> str:
        return "pv"

    @property
    def controllable(self) -> bool:
        return True


def pv_available_power(model: PVModel, irradiance: float, temperature: float,
                       headroom: float = 1.1) -> float:
    """
    Maximum active power the inverter can feed in.

    P = P_ref * E/E_ref * (1 + alpha (T - T_ref)) * eta_inverter, clamped to
    [0, P_ref * eta_inverter * headroom].

    Args:
        model: PV inverter
        irradiance: E in W/m^2
        temperature: Module temperature in degC
        headroom: Upper clamp relative to P_ref * eta_inverter

    Returns:
        Available feed-in in kW (positive)

    Raises:
        InputError: If irradiance is negative
    """
    if irradiance < 0:
        raise InputError(f"irradiance must be >= 0, got {irradiance}")
    power = (model.p_ref * (irradiance / model.e_ref)
             * (1.0 + model.alpha * (temperature - model.t_ref)) * model.eta_inverter)
    return min(max(power, 0.0), model.p_ref * model.eta_inverter * headroom)
