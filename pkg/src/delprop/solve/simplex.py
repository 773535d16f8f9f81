"""Dense bounded-variable primal simplex.

Solves ``min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lb <= x <= ub`` with
finite bounds. Every row gets a slack (equality slacks are fixed at 0), rows
whose slack would start infeasible get an artificial variable, and phase 1
minimizes the artificial sum. Pricing is Dantzig's rule, switching to Bland's
rule after a run of degenerate pivots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL, INFEASIBLE, UNBOUNDED, NUMERICAL = "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "NUMERICAL"


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int


class _Tableau:
    def __init__(self, A, b, lb, ub, basis, at_upper, tol):
        self.A, self.b, self.lb, self.ub = A, b, lb, ub
        self.basis = list(basis)
        self.at_upper = at_upper  # bool per column, meaningful for nonbasics
        self.tol = tol
        self.iterations = 0

    def values(self) -> np.ndarray:
        n = self.A.shape[1]
        x = np.where(self.at_upper, self.ub, self.lb).astype(float)
        basic = np.zeros(n, dtype=bool)
        basic[self.basis] = True
        x[basic] = 0.0
        rhs = self.b - self.A[:, ~basic] @ x[~basic]
        x[self.basis] = np.linalg.solve(self.A[:, self.basis], rhs)
        return x

    def run(self, c: np.ndarray, max_iter: int, bland_after: int = 50) -> str:
        m, n = self.A.shape
        tol = self.tol
        degenerate_run = 0
        while True:
            if self.iterations >= max_iter:
                return NUMERICAL
            B = self.A[:, self.basis]
            try:
                x = self.values()
                y = np.linalg.solve(B.T, c[self.basis])
            except np.linalg.LinAlgError:
                return NUMERICAL
            d = c - self.A.T @ y
            basic = np.zeros(n, dtype=bool)
            basic[self.basis] = True
            movable = (~basic) & (self.ub - self.lb > tol)
            improving = movable & np.where(self.at_upper, d > tol, d < -tol)
            candidates = np.flatnonzero(improving)
            if candidates.size == 0:
                return OPTIMAL
            use_bland = degenerate_run >= bland_after
            j = int(candidates[0]) if use_bland else int(candidates[np.argmax(np.abs(d[candidates]))])
            direction = -1.0 if self.at_upper[j] else 1.0
            alpha = np.linalg.solve(B, self.A[:, j])
            # x_B moves by -direction * theta * alpha
            step = direction * alpha
            theta = self.ub[j] - self.lb[j]
            leave, leave_to_upper = -1, False
            for r in range(m):
                i = self.basis[r]
                if step[r] > tol:
                    t = (x[i] - self.lb[i]) / step[r]
                    to_upper = False
                elif step[r] < -tol:
                    t = (self.ub[i] - x[i]) / -step[r]
                    to_upper = True
                else:
                    continue
                t = max(t, 0.0)
                better = t < theta - 1e-12
                tie = (use_bland and leave >= 0 and np.isfinite(theta)
                       and abs(t - theta) <= 1e-12 and i < self.basis[leave])
                if better or tie:
                    theta, leave, leave_to_upper = t, r, to_upper
            if not np.isfinite(theta):
                return UNBOUNDED
            degenerate_run = degenerate_run + 1 if theta <= 1e-12 else 0
            self.iterations += 1
            if leave < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue
            out = self.basis[leave]
            self.at_upper[out] = leave_to_upper
            self.basis[leave] = j
            self.at_upper[j] = False


def simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None,
            tol: float = 1e-9, max_iter: int = 50_000) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float)
    ub = np.ones(n) if ub is None else np.asarray(ub, dtype=float)
    if np.any(lb > ub + tol):
        return SimplexResult(INFEASIBLE, None, None, 0)
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    A = np.vstack([A_ub, A_eq])
    b = np.concatenate([b_ub, b_eq])
    m = A.shape[0]
    if m == 0:
        x = np.where(c < 0, ub, lb)
        return SimplexResult(OPTIMAL, x, float(c @ x), 0)

    # columns: structural | slacks | artificials
    slack_ub = np.concatenate([np.full(b_ub.size, np.inf), np.zeros(b_eq.size)])
    x0 = lb.copy()
    resid = b - A @ x0
    # a <= slack absorbs a non-negative residual; an equality slack absorbs none
    need_art = np.where(np.isfinite(slack_ub), np.abs(resid) > tol, resid < -tol)
    art_rows = np.flatnonzero(need_art)
    k = art_rows.size
    art = np.zeros((m, k))
    for col, r in enumerate(art_rows):
        art[r, col] = 1.0 if resid[r] >= 0 else -1.0
    A_full = np.hstack([A, np.eye(m), art])
    lb_full = np.concatenate([lb, np.zeros(m), np.zeros(k)])
    ub_full = np.concatenate([ub, slack_ub, np.full(k, np.inf)])
    basis = []
    art_of_row = {r: n + m + col for col, r in enumerate(art_rows)}
    for r in range(m):
        basis.append(art_of_row.get(r, n + r))
    at_upper = np.zeros(n + m + k, dtype=bool)
    tab = _Tableau(A_full, b, lb_full, ub_full, basis, at_upper, tol)

    if k:
        c1 = np.concatenate([np.zeros(n + m), np.ones(k)])
        status = tab.run(c1, max_iter)
        if status != OPTIMAL:
            return SimplexResult(NUMERICAL if status == UNBOUNDED else status, None, None, tab.iterations)
        x = tab.values()
        if x[n + m:].sum() > 1e-7 * max(1.0, np.abs(b).max()):
            return SimplexResult(INFEASIBLE, None, None, tab.iterations)
        # pin artificials at zero for phase 2
        tab.ub[n + m:] = 0.0
    c2 = np.concatenate([c, np.zeros(m + k)])
    status = tab.run(c2, max_iter)
    if status != OPTIMAL:
        return SimplexResult(status, None, None, tab.iterations)
    x = tab.values()[:n]
    x = np.clip(x, lb, ub)
    return SimplexResult(OPTIMAL, x, float(c @ x), tab.iterations)
