"""
Newton-Raphson AC power flow.

Powers are given in the consumer counting system (consumption positive,
feed-in negative) in kW/kVar; internally everything is per unit on the
network's S_base.
"""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple
import logging

import numpy as np

from core.errors import DimensionError, DivergenceError, InputError
from network.admittance import branch_matrices
from network.base import Network
from .derivatives import (branch_end_flows, bus_injection, complex_voltage,
                          power_flow_jacobian)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InjectionSpec:
    """Consumer-convention P (kW) and Q (kVar) per non-slack bus; missing buses are 0."""
    p: Mapping[str, float] = field(default_factory=dict)
    q: Mapping[str, float] = field(default_factory=dict)

    def consumption_pu(self, net: Network) -> np.ndarray:
        """
        Complex consumption vector in p.u., zero at the slack bus.

        Raises:
            InputError: Unknown bus, slack bus entry or non-finite value
        """
        s = np.zeros(net.n_bus, dtype=complex)
        slack_id = net.buses[net.slack_index].id
        for values, unit in ((self.p, 1.0), (self.q, 1j)):
            for bus_id, value in values.items():
                if not net.has_bus(bus_id):
                    raise InputError(f"Injection at unknown bus {bus_id!r}")
                if bus_id == slack_id:
                    raise InputError(f"Slack bus {bus_id!r} cannot carry a specified injection")
                if not np.isfinite(value):
                    raise InputError(f"Non-finite injection at {bus_id!r}: {value}")
                s[net.bus_index(bus_id)] += unit * float(value) / net.s_base
        return s

    def plus(self, p: Mapping[str, float], q: Optional[Mapping[str, float]] = None) -> "InjectionSpec":
        """Return a new spec with the given powers added bus-wise."""
        new_p: Dict[str, float] = dict(self.p)
        new_q: Dict[str, float] = dict(self.q)
        for bus_id, value in p.items():
            new_p[bus_id] = new_p.get(bus_id, 0.0) + value
        for bus_id, value in (q or {}).items():
            new_q[bus_id] = new_q.get(bus_id, 0.0) + value
        return InjectionSpec(p=new_p, q=new_q)


@dataclass(frozen=True)
class PFSolution:
    """Result of a power-flow solve."""
    net: Network
    V: np.ndarray  # p.u.
    delta: np.ndarray  # rad
    S_from: np.ndarray  # kVA complex, into branch at from end
    S_to: np.ndarray  # kVA complex, into branch at to end
    converged: bool
    iterations: int
    max_mismatch: float  # p.u.

    def voltage(self, bus_id: str) -> float:
        return float(self.V[self.net.bus_index(bus_id)])

    def angle(self, bus_id: str) -> float:
        return float(self.delta[self.net.bus_index(bus_id)])

    def loading(self, branch_id: str) -> float:
        """max(|S_ij|, |S_ji|) in kVA."""
        k = self.net.branch_index(branch_id)
        return float(max(abs(self.S_from[k]), abs(self.S_to[k])))

    def consumption(self) -> np.ndarray:
        """Complex consumption at every bus in kW/kVar, recomputed from V and delta."""
        V = complex_voltage(self.V, self.delta)
        return -bus_injection(branch_matrices(self.net).Ybus, V) * self.net.s_base


def solve_pf(net: Network, inj: InjectionSpec, tol: float = 1e-8, max_iter: int = 30,
             slack_voltage: float = 1.0,
             init: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> PFSolution:
    """
    Solve the AC power flow with a full Newton-Raphson iteration.

    Args:
        net: Network
        inj: Consumer-convention injections at non-slack buses
        tol: Max power mismatch in p.u.
        max_iter: Newton iteration limit
        slack_voltage: Slack bus voltage magnitude in p.u.
        init: Optional (V, delta) start; flat start otherwise

    Returns:
        Converged PFSolution

    Raises:
        InputError: If tol <= 0 or the injections are invalid
        DivergenceError: If no convergence within max_iter (carries the last mismatch)
    """
    if tol <= 0:
        raise InputError(f"tol must be > 0, got {tol}")
    mats = branch_matrices(net)
    Ybus = mats.Ybus
    n = net.n_bus
    slack = net.slack_index
    pq = np.array([i for i in range(n) if i != slack], dtype=int)
    S_spec = -inj.consumption_pu(net)

    if init is None:
        vm = np.ones(n)
        va = np.zeros(n)
    else:
        vm = np.array(init[0], dtype=float).copy()
        va = np.array(init[1], dtype=float).copy()
        if vm.shape != (n,) or va.shape != (n,):
            raise DimensionError(f"init must have length {n}")
    vm[slack] = slack_voltage
    va[slack] = 0.0

    npq = len(pq)
    mismatch = np.inf
    for iteration in range(max_iter + 1):
        V = complex_voltage(vm, va)
        mis = bus_injection(Ybus, V) - S_spec
        F = np.concatenate([mis.real[pq], mis.imag[pq]])
        mismatch = float(np.max(np.abs(F))) if npq else 0.0
        if not np.isfinite(mismatch):
            break
        if mismatch <= tol:
            Sf, St = branch_end_flows(mats.Yf, mats.Yt, mats.Cf, mats.Ct, V)
            logger.debug("Power flow converged in %d iterations (mismatch %.3e)", iteration, mismatch)
            return PFSolution(net=net, V=vm, delta=va, S_from=Sf * net.s_base, S_to=St * net.s_base,
                              converged=True, iterations=iteration, max_mismatch=mismatch)
        if iteration == max_iter:
            break
        J = power_flow_jacobian(Ybus, V, pq)
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise DivergenceError("Singular power-flow Jacobian", mismatch=mismatch, iterations=iteration)
        va[pq] += dx[:npq]
        vm[pq] += dx[npq:]

    raise DivergenceError(f"Power flow did not converge in {max_iter} iterations "
                          f"(mismatch {mismatch:.3e} p.u.)", mismatch=mismatch, iterations=max_iter)


def branch_flows(net: Network, V: np.ndarray, delta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Complex branch-end flows for a given state.

    Args:
        net: Network
        V: Voltage magnitudes (p.u.), length n
        delta: Voltage angles (rad), length n

    Returns:
        (S_ij, S_ji) in kVA: power entering each branch at its from and to end

    Raises:
        DimensionError: If V or delta do not have length n
    """
    V = np.asarray(V, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if V.shape != (net.n_bus,) or delta.shape != (net.n_bus,):
        raise DimensionError(f"V and delta must have length {net.n_bus}, got {V.shape} and {delta.shape}")
    mats = branch_matrices(net)
    Sf, St = branch_end_flows(mats.Yf, mats.Yt, mats.Cf, mats.Ct, complex_voltage(V, delta))
    return Sf * net.s_base, St * net.s_base
