"""
gridcon asset models.
"""
from typing import Any, Dict, Type

from core.errors import ConfigError
from .base import AssetModel
from .battery import BatteryModel, bss_integrate_soc, bss_target_power
from .ev import EVModel
from .flexibility import (DEFAULT_COSTS, CostFactors, Flexibility, FlexibilitySet, GridContext,
                          PowerBounds, build_flexibility, flexibility_bounds, target_power)
from .load import ResistiveLoad
from .oltc import OLTCModel
from .pv import PVModel, european_efficiency, pv_available_power

# Register all asset classes
ASSET_REGISTRY: Dict[str, Type[AssetModel]] = {
    "bss": BatteryModel,
    "pv": PVModel,
    "ev": EVModel,
    "oltc": OLTCModel,
    "load": ResistiveLoad,
}


def get_asset(kind: str, **kwargs) -> AssetModel:
    """
    Build an asset model by registry key.

    Args:
        kind: Asset type key
        **kwargs: Constructor arguments

    Returns:
        Asset model instance

    Raises:
        ConfigError: If the kind is unknown or the arguments do not fit
    """
    if kind not in ASSET_REGISTRY:
        raise ConfigError(f"Unknown asset kind: {kind}. Available kinds: {list(ASSET_REGISTRY.keys())}")
    try:
        return ASSET_REGISTRY[kind](**kwargs)
    except TypeError as e:
        raise ConfigError(f"invalid parameters for {kind}: {e}")
