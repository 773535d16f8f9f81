"""LP solving over IlpModel: matrix assembly, engine dispatch, post-checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ..ilpbuild import IlpModel, VarId
from .simplex import simplex

OPTIMAL = "OPTIMAL"
INFEASIBLE = "INFEASIBLE"
UNBOUNDED = "UNBOUNDED"
NUMERICAL = "NUMERICAL"
BUDGET = "BUDGET"


@dataclass(frozen=True)
class SolverConfig:
    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    engine: str = "highs"  # "highs" (scipy) or "simplex" (in-house)
    max_nodes: int = 200_000
    time_limit: float | None = None  # seconds
    rounding_heuristic: bool = True


DEFAULT_CONFIG = SolverConfig()


@dataclass
class LpSolution:
    status: str
    objective: float | None
    assignment: dict[VarId, float] = field(default_factory=dict)
    missing: int = 0  # variables absent from an imported solution file

    def values(self, model: IlpModel) -> np.ndarray:
        return np.array([self.assignment.get(v, 0.0) for v in model.variables])


class MatrixForm:
    """``min c.x  s.t.  A_ub x <= b_ub, A_eq x = b_eq``; rows with >= are negated."""

    def __init__(self, model: IlpModel):
        n = len(model.variables)
        idx = model.index
        self.n = n
        self.c = np.zeros(n)
        for v, coef in model.objective.items():
            self.c[idx[v]] = coef
        ub_rows, ub_cols, ub_vals, b_ub = [], [], [], []
        eq_rows, eq_cols, eq_vals, b_eq = [], [], [], []
        for con in model.constraints:
            if con.sense == "=":
                r = len(b_eq)
                for v, coef in con.terms:
                    eq_rows.append(r); eq_cols.append(idx[v]); eq_vals.append(coef)
                b_eq.append(con.rhs)
                continue
            sign = 1.0 if con.sense == "<=" else -1.0
            r = len(b_ub)
            for v, coef in con.terms:
                ub_rows.append(r); ub_cols.append(idx[v]); ub_vals.append(sign * coef)
            b_ub.append(sign * con.rhs)
        self.A_ub = sparse.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(len(b_ub), n))
        self.b_ub = np.asarray(b_ub, dtype=float)
        self.A_eq = sparse.csr_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(b_eq), n))
        self.b_eq = np.asarray(b_eq, dtype=float)
        self.integral_objective = bool(np.all(self.c == np.round(self.c)))

    def max_violation(self, x: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> float:
        viol = [0.0, float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0))]
        if self.b_ub.size:
            viol.append(float(np.max(self.A_ub @ x - self.b_ub, initial=0.0)))
        if self.b_eq.size:
            viol.append(float(np.max(np.abs(self.A_eq @ x - self.b_eq), initial=0.0)))
        return max(viol)


def solve_arrays(form: MatrixForm, lb: np.ndarray, ub: np.ndarray,
                 config: SolverConfig = DEFAULT_CONFIG) -> tuple[str, np.ndarray | None, float | None]:
    """Solve the LP with variable bounds ``lb``/``ub``; returns (status, x, objective)."""
    if np.any(lb > ub + config.feas_tol):
        return INFEASIBLE, None, None
    if form.n == 0:
        return OPTIMAL, np.zeros(0), 0.0
    has_ub, has_eq = form.b_ub.size > 0, form.b_eq.size > 0
    if config.engine == "simplex":
        res = simplex(form.c,
                      form.A_ub.toarray() if has_ub else None, form.b_ub if has_ub else None,
                      form.A_eq.toarray() if has_eq else None, form.b_eq if has_eq else None,
                      lb, ub)
        status, x = res.status, res.x
    elif config.engine == "highs":
        res = linprog(form.c,
                      A_ub=form.A_ub if has_ub else None, b_ub=form.b_ub if has_ub else None,
                      A_eq=form.A_eq if has_eq else None, b_eq=form.b_eq if has_eq else None,
                      bounds=np.column_stack([lb, ub]), method="highs-ds")
        status = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, NUMERICAL)
        x = res.x if status == OPTIMAL else None
    else:
        raise ValueError(f"unknown LP engine {config.engine!r}")
    if status != OPTIMAL:
        return status, None, None
    x = np.asarray(x, dtype=float)
    if form.max_violation(x, lb, ub) > config.feas_tol:
        return NUMERICAL, None, None
    # snap bound noise so integrality checks see clean values
    x = np.where(np.abs(x - lb) <= 1e-9, lb, x)
    x = np.where(np.abs(x - ub) <= 1e-9, ub, x)
    return OPTIMAL, x, float(form.c @ x)


def clean_objective(value: float, integral_objective: bool, tol: float = 1e-6) -> float | int:
    """Report a value within tolerance of an integer as that integer."""
    r = round(value)
    if abs(value - r) <= tol and (integral_objective or abs(value - r) <= 1e-9):
        return int(r)
    return value


def solve_lp(model: IlpModel, config: SolverConfig = DEFAULT_CONFIG) -> LpSolution:
    """Optimal basic solution of the LP relaxation of ``model`` (integrality ignored)."""
    form = MatrixForm(model)
    n = form.n
    status, x, obj = solve_arrays(form, np.zeros(n), np.ones(n), config)
    if status != OPTIMAL:
        return LpSolution(status, None)
    return LpSolution(OPTIMAL, clean_objective(obj, False),
                      {v: float(x[i]) for i, v in enumerate(model.variables)})


def max_fractionality(x: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    return float(np.max(np.abs(x - np.round(x))))
