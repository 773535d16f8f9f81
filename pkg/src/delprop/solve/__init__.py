"""LP and ILP solving for compiled deletion-propagation models."""

from __future__ import annotations

from ..ilpbuild import IlpModel, lp_relaxation
from ..relcore import TupleRef
from .bnb import MipResult, solve_ilp
from .external import ExternalSolverError, solve_external
from .lp import (BUDGET, DEFAULT_CONFIG, INFEASIBLE, NUMERICAL, OPTIMAL, UNBOUNDED, LpSolution,
                 SolverConfig, max_fractionality, solve_lp)
from .lpfile import SolutionFormatError, export_lp_file, format_lp, import_solution, write_solution


class FractionalSolutionError(ValueError):
    pass


def extract_interventions(model: IlpModel, solution, tol: float = 1e-6) -> set[TupleRef]:
    """Tuples whose deletion variable is 1 in an integral solution."""
    gamma = set()
    for v in model.tuple_variables():
        x = solution.assignment.get(v, 0.0)
        if tol < x < 1 - tol:
            raise FractionalSolutionError(f"{v} = {x:.6g} is fractional; use solve_ilp for an integral solution")
        if x >= 1 - tol:
            gamma.add(TupleRef(*v.key))
    return gamma


def integrality_report(model: IlpModel, config: SolverConfig = DEFAULT_CONFIG) -> dict:
    """Solve relaxation and ILP; report whether the LP optimum found is integral and the gap."""
    lp = solve_lp(lp_relaxation(model), config)
    ilp = solve_ilp(model, config)
    out = {"lp_status": lp.status, "ilp_status": ilp.status, "lp_objective": lp.objective,
           "ilp_objective": ilp.objective, "gap": None, "lp_integral": False,
           "node_count": ilp.node_count}
    if lp.status == OPTIMAL:
        out["lp_integral"] = max(map(abs, (x - round(x) for x in lp.assignment.values())), default=0.0) < config.int_tol
    if lp.status == OPTIMAL and ilp.status == OPTIMAL:
        gap = ilp.objective - lp.objective
        out["gap"] = 0 if abs(gap) <= config.int_tol else gap
    return out


__all__ = [
    "BUDGET", "DEFAULT_CONFIG", "INFEASIBLE", "NUMERICAL", "OPTIMAL", "UNBOUNDED",
    "ExternalSolverError", "FractionalSolutionError", "LpSolution", "MipResult", "SolutionFormatError",
    "SolverConfig", "export_lp_file", "extract_interventions", "format_lp", "import_solution",
    "integrality_report", "max_fractionality", "solve_external", "solve_ilp", "solve_lp", "write_solution",
]
