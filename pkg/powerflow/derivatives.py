"""
Analytic derivatives of bus injections and branch flows in polar coordinates.

Shared by the Newton-Raphson solver, the WLS estimator and the OPF. Layout and
formulas follow the MATPOWER ``dSbus_dV``/``dSbr_dV`` convention.
"""
from typing import Tuple

import numpy as np


def complex_voltage(vm: np.ndarray, va: np.ndarray) -> np.ndarray:
    return vm * np.exp(1j * va)


def bus_injection(Ybus: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Complex power injected into the network at every bus (generator convention), p.u."""
    return V * np.conj(Ybus @ V)


def dSbus_dV(Ybus: np.ndarray, V: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Partial derivatives of bus injections.

    Returns:
        (dS_dVa, dS_dVm), each n x n complex
    """
    Ibus = Ybus @ V
    diagV = np.diag(V)
    diagIbus = np.diag(Ibus)
    diagVnorm = np.diag(V / np.abs(V))
    dS_dVm = diagV @ np.conj(Ybus @ diagVnorm) + np.conj(diagIbus) @ diagVnorm
    dS_dVa = 1j * diagV @ np.conj(diagIbus - Ybus @ diagV)
    return dS_dVa, dS_dVm


def branch_end_flows(Yf: np.ndarray, Yt: np.ndarray, Cf: np.ndarray, Ct: np.ndarray,
                     V: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Complex power entering each branch at its from and to end, p.u."""
    Sf = (Cf @ V) * np.conj(Yf @ V)
    St = (Ct @ V) * np.conj(Yt @ V)
    return Sf, St


def dSbr_dV(Ybr: np.ndarray, Cbr: np.ndarray, V: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Partial derivatives of branch-end flows for one end.

    Args:
        Ybr: Yf or Yt
        Cbr: Cf or Ct
        V: complex bus voltages

    Returns:
        (dS_dVa, dS_dVm), each nl x n complex
    """
    Ibr = Ybr @ V
    Vbr = Cbr @ V
    diagV = np.diag(V)
    diagVnorm = np.diag(V / np.abs(V))
    diagIbr = np.diag(Ibr)
    diagVbr = np.diag(Vbr)
    dS_dVa = 1j * (np.conj(diagIbr) @ Cbr @ diagV - diagVbr @ np.conj(Ybr @ diagV))
    dS_dVm = diagVbr @ np.conj(Ybr @ diagVnorm) + np.conj(diagIbr) @ Cbr @ diagVnorm
    return dS_dVa, dS_dVm


def dAbr2_dV(S: np.ndarray, dS_dVa: np.ndarray, dS_dVm: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Derivatives of squared apparent-power magnitude |S|^2 from those of S."""
    dA_dVa = 2.0 * (S.real[:, None] * dS_dVa.real + S.imag[:, None] * dS_dVa.imag)
    dA_dVm = 2.0 * (S.real[:, None] * dS_dVm.real + S.imag[:, None] * dS_dVm.imag)
    return dA_dVa, dA_dVm


def power_flow_jacobian(Ybus: np.ndarray, V: np.ndarray, pq: np.ndarray) -> np.ndarray:
    """
    Real Jacobian of [P; Q] mismatches at ``pq`` buses w.r.t. [Va; Vm] at ``pq`` buses.
    """
    dS_dVa, dS_dVm = dSbus_dV(Ybus, V)
    ix = np.ix_(pq, pq)
    return np.block([
        [dS_dVa.real[ix], dS_dVm.real[ix]],
        [dS_dVa.imag[ix], dS_dVm.imag[ix]],
    ])
