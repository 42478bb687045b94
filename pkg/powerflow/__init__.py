"""
AC power flow: the simulated physical grid and the oracle for SE/OPF tests.
"""
from .newton import InjectionSpec, PFSolution, solve_pf, branch_flows
from .derivatives import (bus_injection, complex_voltage, dSbus_dV, dSbr_dV, dAbr2_dV,
                          branch_end_flows, power_flow_jacobian)
