"""
Weighted-least-squares state estimation (Gauss-Newton on the normal equations).

State vector x = [angles at non-slack buses, magnitudes at all buses]; the
slack angle is the reference and fixed at 0.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple
import logging

import numpy as np

from core.errors import DivergenceError, UnobservableError
from network.admittance import branch_matrices
from network.base import Network
from powerflow.derivatives import (branch_end_flows, bus_injection, complex_voltage,
                                   dSbr_dV, dSbus_dV)
from .measurements import MeasurementKind, MeasurementSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SystemState:
    """Estimated grid state; P and Q are consumer-convention p.u."""
    net: Network
    V: np.ndarray
    delta: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    timestamp: float = 0.0

    @classmethod
    def from_voltages(cls, net: Network, V: np.ndarray, delta: np.ndarray,
                      timestamp: float = 0.0) -> "SystemState":
        """Build a state from V and delta, recomputing the injections."""
        S = -bus_injection(branch_matrices(net).Ybus, complex_voltage(V, delta))
        return cls(net=net, V=np.asarray(V, dtype=float), delta=np.asarray(delta, dtype=float),
                   P=S.real, Q=S.imag, timestamp=timestamp)

    def voltage(self, bus_id: str) -> float:
        return float(self.V[self.net.bus_index(bus_id)])

    def consumption_kw(self, bus_id: str) -> complex:
        i = self.net.bus_index(bus_id)
        return complex(self.P[i], self.Q[i]) * self.net.s_base

    def to_dict(self) -> Dict[str, Any]:
        return {
            "timestamp": self.timestamp,
            "buses": {bus_id: {"V": float(self.V[i]), "delta": float(self.delta[i]),
                               "P": float(self.P[i]), "Q": float(self.Q[i])}
                      for i, bus_id in enumerate(self.net.bus_ids)},
        }


@dataclass
class EstimationReport:
    """Diagnostics of one WLS run."""
    converged: bool = False
    iterations: int = 0
    condition: float = float("nan")
    gradient_norm: float = float("nan")
    objective_history: List[float] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        h = self.objective_history
        return all(b <= a * (1 + 1e-9) + 1e-300 for a, b in zip(h, h[1:]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "condition": self.condition,
            "gradient_norm": self.gradient_norm,
            "objective_initial": self.objective_history[0] if self.objective_history else None,
            "objective_final": self.objective_history[-1] if self.objective_history else None,
        }


class MeasurementModel:
    """Measurement function h(x) and its Jacobian H for one network and measurement set."""

    def __init__(self, net: Network, z: MeasurementSet):
        self.net = net
        self.mats = branch_matrices(net)
        self.n = net.n_bus
        self.slack = net.slack_index
        self.nonslack = np.array([i for i in range(self.n) if i != self.slack], dtype=int)
        self.kinds = [m.kind for m in z]
        self.rows = [self.net.branch_index(m.location) if m.kind.on_branch
                     else self.net.bus_index(m.location) for m in z]

    @property
    def n_state(self) -> int:
        return 2 * self.n - 1

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        va = np.zeros(self.n)
        va[self.nonslack] = x[:self.n - 1]
        vm = x[self.n - 1:].copy()
        return vm, va

    def flat_start(self) -> np.ndarray:
        return np.concatenate([np.zeros(self.n - 1), np.ones(self.n)])

    def evaluate(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Args:
            x: State vector

        Returns:
            (h, H): measurement predictions (m,) and Jacobian (m, 2n-1)
        """
        vm, va = self.split(x)
        V = complex_voltage(vm, va)
        mats = self.mats
        cons = -bus_injection(mats.Ybus, V)
        Sf, _ = branch_end_flows(mats.Yf, mats.Yt, mats.Cf, mats.Ct, V)
        dSb_dVa, dSb_dVm = dSbus_dV(mats.Ybus, V)
        dSf_dVa, dSf_dVm = dSbr_dV(mats.Yf, mats.Cf, V)

        m = len(self.kinds)
        h = np.zeros(m)
        H = np.zeros((m, self.n_state))
        for r, (kind, idx) in enumerate(zip(self.kinds, self.rows)):
            if kind == MeasurementKind.VOLTAGE:
                h[r] = vm[idx]
                H[r, self.n - 1 + idx] = 1.0
                continue
            if kind in (MeasurementKind.P_INJECTION, MeasurementKind.Q_INJECTION):
                value, d_va, d_vm = cons[idx], -dSb_dVa[idx], -dSb_dVm[idx]
            else:
                value, d_va, d_vm = Sf[idx], dSf_dVa[idx], dSf_dVm[idx]
            part = np.real if kind in (MeasurementKind.P_INJECTION, MeasurementKind.P_FLOW) else np.imag
            h[r] = part(value)
            H[r, :self.n - 1] = part(d_va[self.nonslack])
            H[r, self.n - 1:] = part(d_vm)
        return h, H


def estimate(net: Network, z: MeasurementSet, tol: float = 1e-8, max_iter: int = 25,
             max_condition: float = 1e12) -> Tuple[SystemState, EstimationReport]:
    """
    Estimate V and delta from a measurement set.

    Iterates G dx = H^T W (z - h(x)) with G = H^T W H from a flat start until
    the weighted gradient max|H^T W r| / max(w) is at most tol. Dividing by the
    largest weight keeps the test independent of the weight scale.

    Args:
        net: Network
        z: Measurements
        tol: Gradient-norm stopping threshold
        max_iter: Gauss-Newton iteration limit
        max_condition: Gain-matrix condition number above which the system is unobservable

    Returns:
        (SystemState, EstimationReport)

    Raises:
        UnobservableError: Too few measurements, no voltage reference, or singular gain matrix
        DivergenceError: No convergence within max_iter
    """
    issues = z.check(net)
    if issues:
        raise UnobservableError("; ".join(issues))

    model = MeasurementModel(net, z)
    values = z.values()
    w = z.weights()
    x = model.flat_start()
    report = EstimationReport()

    for iteration in range(max_iter + 1):
        h, H = model.evaluate(x)
        r = values - h
        objective = float(np.sum(w * r * r))
        if report.objective_history and objective > report.objective_history[-1] * (1 + 1e-9):
            logger.warning("WLS objective increased at iteration %d (%.3e -> %.3e)",
                           iteration, report.objective_history[-1], objective)
        report.objective_history.append(objective)

        HtW = H.T * w
        G = HtW @ H
        g = HtW @ r
        report.condition = float(np.linalg.cond(G))
        report.gradient_norm = float(np.max(np.abs(g)) / np.max(w))
        if not np.isfinite(report.condition) or report.condition > max_condition:
            raise UnobservableError(f"Gain matrix is numerically singular (cond {report.condition:.3e})",
                                    condition=report.condition)
        if report.gradient_norm <= tol:
            report.converged = True
            break
        if iteration == max_iter:
            break
        try:
            dx = np.linalg.solve(G, g)
        except np.linalg.LinAlgError:
            raise UnobservableError("Gain matrix is singular", condition=report.condition)
        x = x + dx
        report.iterations = iteration + 1

    if not report.converged:
        raise DivergenceError(f"State estimation did not converge in {max_iter} iterations",
                              mismatch=report.gradient_norm, iterations=max_iter)

    vm, va = model.split(x)
    logger.debug("SE converged in %d iterations (cond %.3e)", report.iterations, report.condition)
    return SystemState.from_voltages(net, vm, va, timestamp=z.timestamp), report
