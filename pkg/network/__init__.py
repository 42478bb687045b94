"""
Grid topology, per-unit system and admittance matrices.
"""
from .base import Bus, Branch, Network, SLACK, LOAD, FLEXIBILITY, CABLE, TRANSFORMER
from .admittance import build_admittance, branch_matrices, apply_tap, BranchMatrices
from .catalog import CABLE_CATALOG, CableType, get_cable, list_cables
from .loader import load_network, network_from_dict
