"""
Interior-point solution of the OPF problem.

Variables (per unit): angles and magnitudes at non-slack buses, then P and Q
of every flexibility. Variables with equal bounds are removed before the
solver sees them.
"""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple
import logging
import warnings

import numpy as np
from scipy.optimize import BFGS, Bounds, NonlinearConstraint, minimize

from core.errors import DivergenceError
from network.admittance import branch_matrices
from powerflow.derivatives import (branch_end_flows, bus_injection, complex_voltage,
                                   dAbr2_dV, dSbr_dV, dSbus_dV)
from powerflow.newton import InjectionSpec, PFSolution, solve_pf
from .problem import OPFProblem, angle_bounds

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
SUBOPTIMAL = "feasible-suboptimal"
INFEASIBLE = "infeasible"

PRESOLVE = "presolve"
INTERIOR_POINT = "interior-point"
ELASTIC = "elastic"

_FIXED_TOL = 1e-12
_ELASTIC_VOLTAGE_BOX = (0.5, 1.5)


@dataclass
class FeasibilityReport:
    """Largest constraint violation per class, all in p.u."""
    equality: float = 0.0
    flow: float = 0.0
    voltage: float = 0.0
    bounds: float = 0.0
    kkt: float = float("nan")

    def inequality(self) -> float:
        return max(self.flow, self.voltage, self.bounds)

    def to_dict(self) -> Dict[str, float]:
        return {"equality": self.equality, "flow": self.flow, "voltage": self.voltage,
                "bounds": self.bounds, "kkt": self.kkt}


@dataclass(frozen=True)
class OPFSolution:
    setpoints: Dict[str, Tuple[float, float]]  # asset id -> (P kW, Q kVar)
    V: np.ndarray
    delta: np.ndarray
    objective: float
    feasibility: FeasibilityReport
    status: str
    phase: str
    iterations: int = 0
    loading: Dict[str, float] = field(default_factory=dict)  # kVA of limited branches

    def p_set(self, asset_id: str) -> float:
        return self.setpoints[asset_id][0]

    def q_set(self, asset_id: str) -> float:
        return self.setpoints[asset_id][1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "phase": self.phase,
            "iterations": self.iterations,
            "objective": self.objective,
            "feasibility": self.feasibility.to_dict(),
            "setpoints": {k: {"P": p, "Q": q} for k, (p, q) in sorted(self.setpoints.items())},
            "V": [float(v) for v in self.V],
            "delta": [float(d) for d in self.delta],
            "loading": dict(self.loading),
        }


class _Formulation:
    """Index bookkeeping, objective and constraint callbacks for one problem."""

    def __init__(self, problem: OPFProblem):
        self.p = problem
        net = problem.net
        self.net = net
        self.sb = net.s_base
        self.mats = branch_matrices(net)
        self.n = net.n_bus
        self.slack = net.slack_index
        self.pq = np.array([i for i in range(self.n) if i != self.slack], dtype=int)
        self.npq = len(self.pq)
        self.flex = list(problem.flex)
        self.nf = len(self.flex)
        self.ny = 2 * self.npq + 2 * self.nf

        self.base = problem.base_injections.consumption_pu(net)
        self.limit_idx, limits_kva = problem.limit_vector()
        self.smax2 = (limits_kva / self.sb) ** 2

        # flexibility -> row in the pq block
        pq_pos = {bus: k for k, bus in enumerate(self.pq)}
        self.flex_row = np.array([pq_pos[net.bus_index(f.bus)] for f in self.flex], dtype=int)

        costs_p = np.array([f.costs.c_p for f in self.flex])
        costs_q = np.array([f.costs.c_q for f in self.flex])
        self.c_scale = float(max(np.max(costs_p), np.max(costs_q))) if self.nf else 1.0
        self.cp = costs_p / self.c_scale if self.nf else costs_p
        self.cq = costs_q / self.c_scale if self.nf else costs_q
        self.p_target = np.array([f.p_target for f in self.flex]) / self.sb

        vmin, vmax = problem.band_arrays()
        amin, amax = angle_bounds()
        lb = np.concatenate([np.full(self.npq, amin), vmin[self.pq],
                             [f.bounds.p_min / self.sb for f in self.flex],
                             [f.bounds.q_min / self.sb for f in self.flex]])
        ub = np.concatenate([np.full(self.npq, amax), vmax[self.pq],
                             [f.bounds.p_max / self.sb for f in self.flex],
                             [f.bounds.q_max / self.sb for f in self.flex]])
        self.lb, self.ub = lb, ub
        self.free = (ub - lb) > _FIXED_TOL
        self.y_fixed = np.where(self.free, 0.0, 0.5 * (lb + ub))

    # -- vector helpers ------------------------------------------------------
    def expand(self, x: np.ndarray) -> np.ndarray:
        y = self.y_fixed.copy()
        y[self.free] = x
        return y

    def reduce(self, y: np.ndarray) -> np.ndarray:
        return y[self.free]

    def split(self, y: np.ndarray):
        k = self.npq
        va = np.zeros(self.n)
        vm = np.full(self.n, self.p.slack_voltage)
        va[self.pq] = y[:k]
        vm[self.pq] = y[k:2 * k]
        P = y[2 * k:2 * k + self.nf]
        Q = y[2 * k + self.nf:]
        return vm, va, P, Q

    def pack(self, vm: np.ndarray, va: np.ndarray, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
        return np.concatenate([va[self.pq], vm[self.pq], P, Q])

    # -- objective ---------------------------------------------------------------
    def objective(self, y: np.ndarray) -> float:
        _, _, P, Q = self.split(y)
        return float(np.sum(self.cp * (P - self.p_target) ** 2) + np.sum(self.cq * Q ** 2))

    def objective_grad(self, y: np.ndarray) -> np.ndarray:
        _, _, P, Q = self.split(y)
        return np.concatenate([np.zeros(2 * self.npq), 2.0 * self.cp * (P - self.p_target),
                               2.0 * self.cq * Q])

    def objective_hess_diag(self) -> np.ndarray:
        return np.concatenate([np.zeros(2 * self.npq), 2.0 * self.cp, 2.0 * self.cq])

    def objective_kw(self, P_kw: np.ndarray, Q_kvar: np.ndarray) -> float:
        """Objective with the raw cost factors in kW/kVar units."""
        c_p = self.cp * self.c_scale
        c_q = self.cq * self.c_scale
        return float(np.sum(c_p * (P_kw - self.p_target * self.sb) ** 2) + np.sum(c_q * Q_kvar ** 2))

    # -- power balance -----------------------------------------------------------
    def consumption(self, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
        s = self.base.copy()
        for f, row in enumerate(self.flex_row):
            s[self.pq[row]] += P[f] + 1j * Q[f]
        return s

    def balance(self, y: np.ndarray) -> np.ndarray:
        vm, va, P, Q = self.split(y)
        V = complex_voltage(vm, va)
        mis = bus_injection(self.mats.Ybus, V) + self.consumption(P, Q)
        return np.concatenate([mis.real[self.pq], mis.imag[self.pq]])

    def balance_jac(self, y: np.ndarray) -> np.ndarray:
        vm, va, _, _ = self.split(y)
        V = complex_voltage(vm, va)
        dVa, dVm = dSbus_dV(self.mats.Ybus, V)
        ix = np.ix_(self.pq, self.pq)
        C = np.zeros((self.npq, self.nf))
        C[self.flex_row, np.arange(self.nf)] = 1.0
        Z = np.zeros((self.npq, self.nf))
        return np.block([
            [dVa.real[ix], dVm.real[ix], C, Z],
            [dVa.imag[ix], dVm.imag[ix], Z, C],
        ])

    # -- branch limits -----------------------------------------------------------
    def flows(self, y: np.ndarray):
        vm, va, _, _ = self.split(y)
        V = complex_voltage(vm, va)
        Sf, St = branch_end_flows(self.mats.Yf, self.mats.Yt, self.mats.Cf, self.mats.Ct, V)
        return V, Sf, St

    def loading(self, y: np.ndarray) -> np.ndarray:
        """|S|^2 / S_max^2 at both ends of every limited branch."""
        _, Sf, St = self.flows(y)
        k = self.limit_idx
        return np.concatenate([np.abs(Sf[k]) ** 2, np.abs(St[k]) ** 2]) / np.tile(self.smax2, 2)

    def loading_jac(self, y: np.ndarray) -> np.ndarray:
        V, Sf, St = self.flows(y)
        k = self.limit_idx
        rows = []
        for Ybr, Cbr, S in ((self.mats.Yf, self.mats.Cf, Sf), (self.mats.Yt, self.mats.Ct, St)):
            dVa, dVm = dSbr_dV(Ybr[k], Cbr[k], V)
            dAa, dAm = dAbr2_dV(S[k], dVa, dVm)
            rows.append(np.hstack([dAa[:, self.pq], dAm[:, self.pq],
                                   np.zeros((len(k), 2 * self.nf))]) / self.smax2[:, None])
        return np.vstack(rows)


def _feasibility(form: _Formulation, pf: PFSolution, P_kw: np.ndarray, Q_kvar: np.ndarray) -> FeasibilityReport:
    """Re-evaluate every constraint class on a power-flow state, independent of the solver."""
    p = form.p
    report = FeasibilityReport(equality=pf.max_mismatch)
    k, limits = p.limit_vector()
    if len(k):
        loading = np.maximum(np.abs(pf.S_from[k]), np.abs(pf.S_to[k]))
        report.flow = float(max(np.max(loading - limits), 0.0) / form.sb)
    vmin, vmax = p.band_arrays()
    over = np.maximum(pf.V - vmax, vmin - pf.V)
    over[form.slack] = 0.0
    report.voltage = float(max(np.max(over), 0.0))
    worst = 0.0
    for f, flex in enumerate(form.flex):
        b = flex.bounds
        worst = max(worst, b.p_min - P_kw[f], P_kw[f] - b.p_max, b.q_min - Q_kvar[f], Q_kvar[f] - b.q_max)
    report.bounds = float(max(worst, 0.0) / form.sb)
    return report


def _evaluate(form: _Formulation, P_kw: np.ndarray, Q_kvar: np.ndarray, pf_tol: float,
              init: Optional[Tuple[np.ndarray, np.ndarray]] = None):
    """Power flow at the given setpoints; None if it does not converge."""
    p = form.p
    p_add: Dict[str, float] = {}
    q_add: Dict[str, float] = {}
    for i, f in enumerate(form.flex):
        p_add[f.bus] = p_add.get(f.bus, 0.0) + float(P_kw[i])
        q_add[f.bus] = q_add.get(f.bus, 0.0) + float(Q_kvar[i])
    inj = p.base_injections.plus(p_add, q_add)
    try:
        pf = solve_pf(p.net, inj, tol=pf_tol, max_iter=50, slack_voltage=p.slack_voltage, init=init)
    except DivergenceError as e:
        logger.debug("OPF polish power flow diverged: %s", e)
        return None
    return pf


def _solution(form: _Formulation, pf: PFSolution, P_kw: np.ndarray, Q_kvar: np.ndarray,
              status: str, phase: str, iterations: int, kkt: float = float("nan")) -> OPFSolution:
    report = _feasibility(form, pf, P_kw, Q_kvar)
    report.kkt = kkt
    k, _ = form.p.limit_vector()
    loading = {form.net.branch_ids[i]: float(max(abs(pf.S_from[i]), abs(pf.S_to[i]))) for i in k}
    return OPFSolution(
        setpoints={f.asset_id: (float(P_kw[i]), float(Q_kvar[i])) for i, f in enumerate(form.flex)},
        V=pf.V.copy(), delta=pf.delta.copy(), objective=form.objective_kw(P_kw, Q_kvar),
        feasibility=report, status=status, phase=phase, iterations=iterations, loading=loading)


def _run_trust_constr(form: _Formulation, y0: np.ndarray, max_iter: int, elastic_weight: Optional[float]):
    """
    Run scipy's trust-constr interior point.

    With ``elastic_weight`` set, flow and voltage limits get non-negative slacks
    whose squared sum is penalised, and voltages move in a wide box.

    Returns:
        (y, result)
    """
    free = form.free
    nx = int(np.sum(free))
    lb, ub = form.lb[free].copy(), form.ub[free].copy()
    hess_diag = form.objective_hess_diag()[free]
    n_flow = 2 * len(form.limit_idx)

    if elastic_weight is None:
        n_slack = 0
    else:
        # one slack per flow row and per non-slack bus voltage
        n_slack = n_flow + form.npq
        vm_cols = np.zeros(form.ny, dtype=bool)
        vm_cols[form.npq:2 * form.npq] = True
        vm_free = vm_cols[free]
        lb[vm_free] = _ELASTIC_VOLTAGE_BOX[0]
        ub[vm_free] = _ELASTIC_VOLTAGE_BOX[1]
        vmin, vmax = form.p.band_arrays()
        vm_pos = np.flatnonzero(vm_free)
        vm_rows = np.flatnonzero(free[form.npq:2 * form.npq])
        v_lo, v_hi = vmin[form.pq][vm_rows], vmax[form.pq][vm_rows]

    def x_part(z):
        return z[:nx]

    def fun(z):
        x = x_part(z)
        value = form.objective(form.expand(x))
        if n_slack:
            value += elastic_weight * float(np.sum(z[nx:] ** 2))
        return value

    def grad(z):
        g = form.objective_grad(form.expand(x_part(z)))[free]
        if n_slack:
            g = np.concatenate([g, 2.0 * elastic_weight * z[nx:]])
        return g

    def hess(z):
        d = hess_diag
        if n_slack:
            d = np.concatenate([d, np.full(n_slack, 2.0 * elastic_weight)])
        return np.diag(d)

    def balance(z):
        return form.balance(form.expand(x_part(z)))

    def balance_jac(z):
        J = form.balance_jac(form.expand(x_part(z)))[:, free]
        return np.hstack([J, np.zeros((J.shape[0], n_slack))]) if n_slack else J

    constraints = [NonlinearConstraint(balance, 0.0, 0.0, jac=balance_jac, hess=BFGS())]

    if n_flow:
        def flow(z):
            h = form.loading(form.expand(x_part(z)))
            return h - z[nx:nx + n_flow] if n_slack else h

        def flow_jac(z):
            J = form.loading_jac(form.expand(x_part(z)))[:, free]
            if n_slack:
                S = np.zeros((n_flow, n_slack))
                S[:, :n_flow] = -np.eye(n_flow)
                J = np.hstack([J, S])
            return J

        constraints.append(NonlinearConstraint(flow, -np.inf, 1.0, jac=flow_jac, hess=BFGS()))

    if n_slack and len(vm_pos):
        m = len(vm_pos)
        A = np.zeros((2 * m, nx + n_slack))
        A[np.arange(m), vm_pos] = 1.0
        A[m + np.arange(m), vm_pos] = -1.0
        A[np.arange(m), nx + n_flow + vm_rows] = -1.0
        A[m + np.arange(m), nx + n_flow + vm_rows] = -1.0

        def volt(z):
            return A @ z

        constraints.append(NonlinearConstraint(volt, -np.inf, np.concatenate([v_hi, -v_lo]),
                                               jac=lambda z: A, hess=BFGS()))

    z_lb = np.concatenate([lb, np.zeros(n_slack)])
    z_ub = np.concatenate([ub, np.full(n_slack, np.inf)])
    x0 = np.clip(form.reduce(y0), lb, ub)
    z0 = np.concatenate([x0, np.zeros(n_slack)])
    if n_slack:
        z0[nx:nx + n_flow] = np.maximum(form.loading(form.expand(x0)) - 1.0, 0.0)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = minimize(fun, z0, method="trust-constr", jac=grad, hess=hess,
                          constraints=constraints, bounds=Bounds(z_lb, z_ub),
                          options={"maxiter": max_iter, "gtol": 1e-9, "xtol": 1e-12,
                                   "barrier_tol": 1e-9, "verbose": 0})
    return form.expand(x_part(result.x)), result


def solve(problem: OPFProblem, tol_eq: float = 1e-6, tol_ineq: float = 1e-4,
          max_iter: int = 1000, elastic_weight: float = 1e4, pf_tol: float = 1e-9) -> OPFSolution:
    """
    Minimise the weighted deviation of the flexibilities from their targets.

    Steps: (1) if every flexibility at its clipped target with Q = 0 satisfies
    all limits, that dispatch is returned; (2) otherwise the full AC problem is
    solved with an interior-point method; (3) if that yields no feasible point,
    an elastic problem minimises the squared limit violations. Every reported
    state comes from a power flow at the returned setpoints.

    Args:
        problem: OPFProblem
        tol_eq: Power-balance tolerance in p.u.
        tol_ineq: Flow/voltage/bound tolerance in p.u.
        max_iter: Iteration cap passed to trust-constr as ``maxiter``. trust-constr
            counts every inner trust-region step, so 1000 of them cover roughly the
            100 outer barrier iterations a classic interior-point code would need
        elastic_weight: Penalty on squared slacks in the elastic phase
        pf_tol: Tolerance of the polishing power flow

    Returns:
        OPFSolution; status ``infeasible`` carries the least-violation point
    """
    form = _Formulation(problem)
    sb = form.sb

    def feasible(report: FeasibilityReport) -> bool:
        return report.equality <= tol_eq and report.inequality() <= tol_ineq

    # presolve: targets are the unconstrained minimiser inside the box
    P_t = np.array([f.clipped_target() for f in form.flex])
    Q_t = np.array([f.bounds.clip(0.0, 0.0)[1] for f in form.flex])
    pf0 = _evaluate(form, P_t, Q_t, pf_tol, init=problem.initial_state)
    if pf0 is not None:
        first = _solution(form, pf0, P_t, Q_t, OPTIMAL, PRESOLVE, 0, kkt=0.0)
        if feasible(first.feasibility):
            logger.debug("OPF presolve: target dispatch is feasible")
            return first
        y0 = form.pack(pf0.V, pf0.delta, P_t / sb, Q_t / sb)
    elif problem.initial_state is not None:
        vm0, va0 = problem.initial_state
        y0 = form.pack(np.asarray(vm0), np.asarray(va0), P_t / sb, Q_t / sb)
    else:
        y0 = form.pack(np.ones(form.n), np.zeros(form.n), P_t / sb, Q_t / sb)

    y, result = _run_trust_constr(form, y0, max_iter, None)
    candidate = _polish(form, y, result, INTERIOR_POINT, pf_tol)
    if candidate is not None and feasible(candidate.feasibility):
        converged = result.status in (1, 2)
        status = OPTIMAL if converged else SUBOPTIMAL
        return _replace_status(candidate, status)

    logger.info("OPF at t=%.0f s: no feasible point found (solver status %d), running elastic phase",
                problem.timestamp, result.status)
    y_el, result_el = _run_trust_constr(form, y, max_iter, elastic_weight)
    elastic = _polish(form, y_el, result_el, ELASTIC, pf_tol)
    best = _least_violation([c for c in (candidate, elastic) if c is not None])
    if best is None:
        # power flow failed at every candidate; report the solver's own state
        vm, va, P, Q = form.split(y_el)
        report = FeasibilityReport(equality=float(np.max(np.abs(form.balance(y_el)))),
                                   kkt=float(result_el.optimality))
        return OPFSolution(
            setpoints={f.asset_id: (float(P[i] * sb), float(Q[i] * sb)) for i, f in enumerate(form.flex)},
            V=vm, delta=va, objective=form.objective_kw(P * sb, Q * sb), feasibility=report,
            status=INFEASIBLE, phase=ELASTIC, iterations=int(result_el.niter))
    status = SUBOPTIMAL if feasible(best.feasibility) else INFEASIBLE
    return _replace_status(best, status)


def _polish(form: _Formulation, y: np.ndarray, result, phase: str, pf_tol: float) -> Optional[OPFSolution]:
    vm, va, P, Q = form.split(y)
    P_kw, Q_kvar = P * form.sb, Q * form.sb
    pf = _evaluate(form, P_kw, Q_kvar, pf_tol, init=(vm, va))
    if pf is None:
        return None
    return _solution(form, pf, P_kw, Q_kvar, INFEASIBLE, phase, int(result.niter),
                     kkt=float(result.optimality))


def _least_violation(candidates: List[OPFSolution]) -> Optional[OPFSolution]:
    if not candidates:
        return None
    return min(candidates, key=lambda c: (c.feasibility.inequality(), c.objective))


def _replace_status(solution: OPFSolution, status: str) -> OPFSolution:
    return replace(solution, status=status)
