"""
Per-unit admittance matrices and tap changes.
"""
from dataclasses import dataclass
import logging

import numpy as np

from core.errors import DegenerateBranchError, TapLimitError, TopologyError
from .base import Branch, Network

logger = logging.getLogger(__name__)


def impedance_base(net: Network, branch: Branch) -> float:
    """Impedance base in ohm of the branch's ``to`` side."""
    v_kv = net.buses[net.bus_index(branch.to_bus)].base_voltage
    return v_kv ** 2 * 1000.0 / net.s_base


def branch_primitive(net: Network, branch: Branch):
    """
    Two-port admittances (y_ff, y_ft, y_tf, y_tt) of one branch in p.u.

    Raises:
        DegenerateBranchError: If the series impedance is zero
    """
    z_base = impedance_base(net, branch)
    z = complex(branch.series_resistance, branch.series_reactance) / z_base
    if abs(z) == 0.0:
        raise DegenerateBranchError(f"Branch {branch.id} has zero series impedance")
    y = 1.0 / z
    half_shunt = 0.5j * branch.shunt_susceptance * z_base
    t = branch.ratio
    y_ff = (y + half_shunt) * t * t
    y_ft = -y * t
    y_tf = -y * t
    y_tt = y + half_shunt
    return y_ff, y_ft, y_tf, y_tt


@dataclass(frozen=True)
class BranchMatrices:
    """Bus admittance matrix plus branch-end matrices (MATPOWER layout)."""
    Ybus: np.ndarray  # n x n
    Yf: np.ndarray  # nl x n, from-end current per unit bus voltage
    Yt: np.ndarray  # nl x n
    Cf: np.ndarray  # nl x n incidence of from buses
    Ct: np.ndarray  # nl x n


def _check_topology(net: Network) -> None:
    if not net.is_connected():
        raise TopologyError(f"Network {net.name!r} is not connected")
    for branch in net.branches:
        if branch.is_transformer:
            continue
        v_from = net.buses[net.bus_index(branch.from_bus)].base_voltage
        v_to = net.buses[net.bus_index(branch.to_bus)].base_voltage
        if v_from != v_to:
            raise TopologyError(f"Cable {branch.id} joins different voltage levels ({v_from} / {v_to} kV)")


def branch_matrices(net: Network) -> BranchMatrices:
    """
    Assemble Ybus, Yf, Yt and the incidence matrices.

    Args:
        net: Network

    Returns:
        BranchMatrices in per unit

    Raises:
        TopologyError: If the graph is disconnected
        DegenerateBranchError: If a branch has zero impedance
    """
    _check_topology(net)
    n, nl = net.n_bus, net.n_branch
    Ybus = np.zeros((n, n), dtype=complex)
    Yf = np.zeros((nl, n), dtype=complex)
    Yt = np.zeros((nl, n), dtype=complex)
    Cf = np.zeros((nl, n))
    Ct = np.zeros((nl, n))

    for k, branch in enumerate(net.branches):
        f = net.bus_index(branch.from_bus)
        t = net.bus_index(branch.to_bus)
        y_ff, y_ft, y_tf, y_tt = branch_primitive(net, branch)
        Ybus[f, f] += y_ff
        Ybus[f, t] += y_ft
        Ybus[t, f] += y_tf
        Ybus[t, t] += y_tt
        Yf[k, f], Yf[k, t] = y_ff, y_ft
        Yt[k, f], Yt[k, t] = y_tf, y_tt
        Cf[k, f] = 1.0
        Ct[k, t] = 1.0

    return BranchMatrices(Ybus=Ybus, Yf=Yf, Yt=Yt, Cf=Cf, Ct=Ct)


def build_admittance(net: Network) -> np.ndarray:
    """
    Complex bus admittance matrix in per unit.

    Args:
        net: Network

    Returns:
        n x n complex matrix
    """
    return branch_matrices(net).Ybus


def apply_tap(net: Network, branch_id: str, tau: int) -> Network:
    """
    Return a copy of ``net`` with the transformer ``branch_id`` at tap ``tau``.

    Args:
        net: Network (left unchanged)
        branch_id: Transformer branch id
        tau: New tap position

    Returns:
        New Network

    Raises:
        TapLimitError: If tau is outside the tap limits
        TopologyError: If the branch is not a transformer
    """
    branch = net.branch(branch_id)
    try:
        stepped = branch.with_tap(tau)
    except TapLimitError:
        logger.debug("Rejected tap %s on %s (limits %s)", tau, branch_id, branch.tap_limits)
        raise
    return net.replace_branch(stepped)
