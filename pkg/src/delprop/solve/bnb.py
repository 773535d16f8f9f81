"""LP-based branch-and-bound for 0/1 models.

Best-bound node selection (ties: deeper first, then creation order), branching
on the most fractional variable (ties: lowest variable index). Child LPs are
solved when created, so every queued node carries its own bound.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..ilpbuild import IlpModel, VarId
from .lp import (BUDGET, DEFAULT_CONFIG, INFEASIBLE, OPTIMAL, MatrixForm, SolverConfig,
                 clean_objective, max_fractionality, solve_arrays)


HEURISTIC_EVERY = 10  # processed nodes between fix-and-solve attempts


@dataclass
class MipResult:
    status: str
    objective: float | int | None
    assignment: dict[VarId, float] = field(default_factory=dict)
    best_bound: float | None = None
    node_count: int = 0
    bound_trace: list[float] = field(default_factory=list)
    root_bound: float | None = None

    def to_json(self) -> dict:
        return {"status": self.status, "objective": self.objective, "best_bound": self.best_bound,
                "node_count": self.node_count}


def _heuristic(form: MatrixForm, x: np.ndarray, lb: np.ndarray, ub: np.ndarray,
               tuple_mask: np.ndarray, config: SolverConfig):
    """Best integral point found by rounding.

    First the plain nearest 0/1 point; then, for tuple variables rounded down,
    to nearest and up, fix them and re-solve the LP over the remaining
    variables, accepting the result when it comes out integral.
    """
    best, best_obj = None, math.inf
    y = np.clip(np.round(x), lb, ub)
    if form.max_violation(y, lb, ub) <= config.feas_tol:
        best, best_obj = y, float(form.c @ y)
    if not tuple_mask.any():
        return best, best_obj
    tried = set()
    for fixed in (np.floor(x + config.int_tol), np.round(x), np.ceil(x - config.int_tol)):
        fixed = np.clip(fixed, lb, ub)
        key = fixed[tuple_mask].tobytes()
        if key in tried:
            continue
        tried.add(key)
        hlb, hub = lb.copy(), ub.copy()
        hlb[tuple_mask] = hub[tuple_mask] = fixed[tuple_mask]
        st, hx, hobj = solve_arrays(form, hlb, hub, config)
        if st == OPTIMAL and max_fractionality(hx) < config.int_tol and hobj < best_obj:
            best, best_obj = np.round(hx), hobj
    return best, best_obj


def solve_ilp(model: IlpModel, config: SolverConfig = DEFAULT_CONFIG) -> MipResult:
    form = MatrixForm(model)
    n = form.n
    tol = config.int_tol
    tuple_mask = np.array([v.kind == "T" for v in model.variables], dtype=bool)
    start = time.perf_counter()

    def prunable(bound: float, incumbent: float) -> bool:
        if bound >= incumbent - tol:
            return True
        # with integer objective coefficients every 0/1 point scores an integer
        return form.integral_objective and math.ceil(bound - tol) >= incumbent - tol

    lb0, ub0 = np.zeros(n), np.ones(n)
    status, x, obj = solve_arrays(form, lb0, ub0, config)
    nodes = 1
    if status != OPTIMAL:
        return MipResult(status, None, node_count=nodes)
    root = obj
    incumbent, best_x = math.inf, None
    if max_fractionality(x) < tol:
        incumbent, best_x = obj, np.round(x)
    elif config.rounding_heuristic:
        y, yobj = _heuristic(form, x, lb0, ub0, tuple_mask, config)
        if y is not None:
            incumbent, best_x = yobj, y

    trace = [root]
    solved_at_root = best_x is not None and (max_fractionality(x) < tol or prunable(root, incumbent))
    heap = [] if solved_at_root else [(root, 0, 0, lb0, ub0, x)]
    seq = 1
    budget_hit = False
    processed = 0
    while heap:
        bound, neg_depth, _, lb, ub, x = heapq.heappop(heap)
        trace.append(min(bound, incumbent))
        if prunable(bound, incumbent):
            heap.clear()
            break
        if nodes >= config.max_nodes or (config.time_limit is not None
                                         and time.perf_counter() - start > config.time_limit):
            heapq.heappush(heap, (bound, neg_depth, seq, lb, ub, x))
            budget_hit = True
            break
        processed += 1
        if config.rounding_heuristic and processed % HEURISTIC_EVERY == 0:
            y, yobj = _heuristic(form, x, lb, ub, tuple_mask, config)
            if y is not None and yobj < incumbent:
                incumbent, best_x = yobj, y
                if prunable(bound, incumbent):
                    continue
        frac = np.abs(x - np.round(x))
        j = int(np.argmax(frac))  # first index among ties
        for value in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = value
            st, cx, cobj = solve_arrays(form, clb, cub, config)
            nodes += 1
            if st != OPTIMAL or prunable(cobj, incumbent):
                continue
            if max_fractionality(cx) < tol:
                incumbent, best_x = cobj, np.round(cx)
                continue
            if config.rounding_heuristic:
                y = np.clip(np.round(cx), clb, cub)
                if form.max_violation(y, clb, cub) <= config.feas_tol and float(form.c @ y) < incumbent:
                    incumbent, best_x = float(form.c @ y), y
                    if prunable(cobj, incumbent):
                        continue
            heapq.heappush(heap, (cobj, neg_depth - 1, seq, clb, cub, cx))
            seq += 1

    if best_x is None and not budget_hit:
        return MipResult(INFEASIBLE, None, best_bound=None, node_count=nodes, bound_trace=trace, root_bound=root)
    assignment = {v: float(best_x[i]) for i, v in enumerate(model.variables)} if best_x is not None else {}
    if budget_hit:
        open_bound = min(h[0] for h in heap)
        bound = min(open_bound, incumbent)
        obj_out = clean_objective(incumbent, form.integral_objective) if best_x is not None else None
        return MipResult(BUDGET, obj_out, assignment, bound, nodes, trace, root)
    value = clean_objective(float(form.c @ best_x), form.integral_objective)
    trace.append(value)
    return MipResult(OPTIMAL, value, assignment, value, nodes, trace, root)
