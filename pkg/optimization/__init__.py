"""
Modified AC optimal power flow with time-variant branch limits.
"""
from .problem import DEFAULT_VOLTAGE_BAND, OPFProblem, angle_bounds, assemble
from .solver import (ELASTIC, INFEASIBLE, INTERIOR_POINT, OPTIMAL, PRESOLVE, SUBOPTIMAL,
                     FeasibilityReport, OPFSolution, solve)
