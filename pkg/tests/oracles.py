"""
Independent reference computations used by the solver tests.

Nothing here imports the solvers under test; admittances are rebuilt from the
raw branch data so a bug in ``network.admittance`` cannot hide in both sides.
"""
import math
from typing import Dict, Tuple

import numpy as np

from network.loader import network_from_dict

LV_KV = 0.4
S_BASE = 100.0  # kVA
Z_BASE = LV_KV ** 2 * 1000.0 / S_BASE  # 1.6 ohm


def random_radial_network(rng: np.random.Generator, n: int, rating_kva: float = 200.0):
    """
    Random radial 0.4 kV cable feeder with ``n`` buses; B0 is the slack.

    Every new bus hangs off a uniformly chosen earlier bus.
    """
    buses = [{"id": "B0", "base_kv": LV_KV, "kind": "slack"}]
    branches = []
    for i in range(1, n):
        parent = int(rng.integers(0, i))
        buses.append({"id": f"B{i}", "base_kv": LV_KV, "kind": "load"})
        branches.append({"id": f"L{i}", "kind": "cable", "from": f"B{parent}", "to": f"B{i}",
                         "r_ohm": float(rng.uniform(0.01, 0.08)),
                         "x_ohm": float(rng.uniform(0.005, 0.04)),
                         "rating_kva": rating_kva})
    return network_from_dict({"name": f"radial-{n}", "s_base_kva": S_BASE,
                              "buses": buses, "branches": branches})


def two_bus_network(r_ohm: float, x_ohm: float, rating_kva: float = 100.0):
    """Slack S and load bus L joined by one cable L1."""
    return network_from_dict({
        "name": "two-bus", "s_base_kva": S_BASE,
        "buses": [{"id": "S", "base_kv": LV_KV, "kind": "slack"},
                  {"id": "L", "base_kv": LV_KV, "kind": "flexibility-connection"}],
        "branches": [{"id": "L1", "kind": "cable", "from": "S", "to": "L",
                      "r_ohm": r_ohm, "x_ohm": x_ohm, "rating_kva": rating_kva}],
    })


def cable_admittance(net) -> np.ndarray:
    """Bus admittance matrix of a cable-only network built from the raw branch data."""
    index = {bus.id: i for i, bus in enumerate(net.buses)}
    Y = np.zeros((len(index), len(index)), dtype=complex)
    for branch in net.branches:
        kv = net.buses[index[branch.to_bus]].base_voltage
        z_base = kv ** 2 * 1000.0 / net.s_base
        y = z_base / complex(branch.series_resistance, branch.series_reactance)
        b = 0.5j * branch.shunt_susceptance * z_base
        f, t = index[branch.from_bus], index[branch.to_bus]
        Y[f, f] += y + b
        Y[t, t] += y + b
        Y[f, t] -= y
        Y[t, f] -= y
    return Y


def gauss_seidel_pf(net, p_kw: Dict[str, float], q_kvar: Dict[str, float],
                    tol: float = 1e-12, max_iter: int = 20000) -> np.ndarray:
    """
    Gauss-Seidel power flow on a cable network.

    Returns:
        Complex bus voltages in p.u. (slack at 1.0)
    """
    Y = cable_admittance(net)
    n = net.n_bus
    slack = net.slack_index
    S = np.zeros(n, dtype=complex)
    for i, bus in enumerate(net.buses):
        S[i] = -complex(p_kw.get(bus.id, 0.0), q_kvar.get(bus.id, 0.0)) / net.s_base
    V = np.ones(n, dtype=complex)
    for _ in range(max_iter):
        largest = 0.0
        for i in range(n):
            if i == slack:
                continue
            sigma = Y[i] @ V - Y[i, i] * V[i]
            new = (np.conj(S[i] / V[i]) - sigma) / Y[i, i]
            largest = max(largest, abs(new - V[i]))
            V[i] = new
        if largest < tol:
            return V
    raise RuntimeError("Gauss-Seidel reference did not converge")


def two_bus_voltage(p_kw: float, q_kvar: float, r_ohm: float, x_ohm: float, v1: float = 1.0) -> float:
    """
    Closed-form receiving-end voltage (p.u.) of a single line feeding P + jQ.

    V2^2 = [(V1^2 - 2(PR + QX)) + sqrt((V1^2 - 2(PR + QX))^2 - 4|Z|^2 (P^2 + Q^2))] / 2
    """
    P, Q = p_kw / S_BASE, q_kvar / S_BASE
    R, X = r_ohm / Z_BASE, x_ohm / Z_BASE
    a = v1 ** 2 - 2.0 * (P * R + Q * X)
    disc = a * a - 4.0 * (R * R + X * X) * (P * P + Q * Q)
    return math.sqrt((a + math.sqrt(disc)) / 2.0)


def two_bus_sending_power(p_kw: float, q_kvar: float, r_ohm: float, x_ohm: float,
                          v1: float = 1.0) -> complex:
    """Power (kVA) entering the line at the slack end: load plus series losses."""
    v2 = two_bus_voltage(p_kw, q_kvar, r_ohm, x_ohm, v1)
    i2 = (p_kw * p_kw + q_kvar * q_kvar) / S_BASE ** 2 / (v2 * v2)
    loss = complex(r_ohm, x_ohm) / Z_BASE * i2 * S_BASE
    return complex(p_kw, q_kvar) + loss


def finite_difference_jacobian(Ybus: np.ndarray, vm: np.ndarray, va: np.ndarray, pq: np.ndarray,
                               h: float = 1e-7) -> np.ndarray:
    """Central-difference Jacobian of [P; Q] at ``pq`` w.r.t. [Va; Vm] at ``pq``."""
    def mismatch(vm_, va_):
        V = vm_ * np.exp(1j * va_)
        S = V * np.conj(Ybus @ V)
        return np.concatenate([S.real[pq], S.imag[pq]])

    npq = len(pq)
    J = np.zeros((2 * npq, 2 * npq))
    for col, i in enumerate(pq):
        for offset, (base_vm, base_va, on_angle) in enumerate(((vm, va, True), (vm, va, False))):
            plus_vm, plus_va = base_vm.copy(), base_va.copy()
            minus_vm, minus_va = base_vm.copy(), base_va.copy()
            if on_angle:
                plus_va[i] += h
                minus_va[i] -= h
            else:
                plus_vm[i] += h
                minus_vm[i] -= h
            J[:, col + offset * npq] = (mismatch(plus_vm, plus_va) - mismatch(minus_vm, minus_va)) / (2 * h)
    return J


def max_feasible_consumption(base_kw: float, q_kvar: float, r_ohm: float, x_ohm: float,
                             limit_kva: float, p_low: float, p_high: float) -> float:
    """
    Largest flexible P in [p_low, p_high] keeping both end flows within ``limit_kva``.

    Both end flows grow monotonically with positive net consumption, so a
    bisection on P is exact to floating-point resolution.
    """
    def loading(p):
        sending = abs(two_bus_sending_power(base_kw + p, q_kvar, r_ohm, x_ohm))
        return max(sending, abs(complex(base_kw + p, q_kvar)))

    if loading(p_high) <= limit_kva:
        return p_high
    if loading(p_low) > limit_kva:
        return float("nan")
    low, high = p_low, p_high
    for _ in range(80):
        mid = 0.5 * (low + high)
        if loading(mid) <= limit_kva:
            low = mid
        else:
            high = mid
    return low


def two_bus_redispatch_oracle(base_kw: float, r_ohm: float, x_ohm: float, limit_kva: float,
                              p_target: float, p_bounds: Tuple[float, float], q_bound: float,
                              c_p: float, c_q: float, steps: int = 2001) -> Tuple[float, float, float]:
    """
    Optimum of min c_p (P - P_target)^2 + c_q Q^2 for one flexibility on a two-bus line.

    Grid search over Q (refined twice around the best point) with an exact
    bisection on P for every Q.

    Returns:
        (objective, P, Q) with P and Q in kW/kVar
    """
    def best_on(qs):
        best = (float("inf"), float("nan"), float("nan"))
        for q in qs:
            p_cap = max_feasible_consumption(base_kw, q, r_ohm, x_ohm, limit_kva, *p_bounds)
            if math.isnan(p_cap):
                continue
            p = min(p_target, p_cap)
            value = c_p * (p - p_target) ** 2 + c_q * q * q
            if value < best[0]:
                best = (value, p, q)
        return best

    best = best_on(np.linspace(-q_bound, q_bound, steps))
    width = 2.0 * q_bound / (steps - 1)
    for _ in range(2):
        q0 = best[2]
        best = best_on(np.linspace(max(-q_bound, q0 - width), min(q_bound, q0 + width), 201))
        width /= 100.0
    return best
