"""Exhaustive ground truth for small instances.

``brute_force`` tries every subset of the database's distinct tuples (Gray-code
order) and re-evaluates every view from scratch on what remains. Evaluation is
a plain backtracking scan over relation rows, kept separate from the indexed
join in ``witness`` so the two routes can disagree; no compiled model is used.

``enumerate_binary`` is the analogous check one level down: all 0/1 points of
a compiled model, used to validate the branch-and-bound solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gdpmodel import GdpInstance
from .relcore import Database, Relation, TupleRef, tuple_weight
from .queryir import Const, Query

INFEASIBLE = "INFEASIBLE"


class OracleCapError(ValueError):
    pass


@dataclass
class OracleResult:
    optimum: int | str
    witness_gamma: tuple[TupleRef, ...] | None
    explored: int

    @property
    def feasible(self) -> bool:
        return self.optimum != INFEASIBLE


def _evaluate(db: Database, q: Query) -> set[tuple]:
    out = set()
    for rule in q.rules:
        def scan(i: int, binding: dict):
            if i == len(rule.body):
                out.add(tuple(binding[v] for v in rule.head_vars))
                return
            atom = rule.body[i]
            for row in db.relations[atom.relation].rows:
                extended = dict(binding)
                for term, value in zip(atom.terms, row):
                    if isinstance(term, Const):
                        ok = term.value == value and type(term.value) is type(value)
                    else:
                        ok = extended.setdefault(term.name, value) == value
                    if not ok:
                        break
                else:
                    scan(i + 1, extended)
        scan(0, {})
    return out


def _without(db: Database, gamma_mask: int, tuples: list[TupleRef]) -> Database:
    doomed: dict[str, set] = {}
    for i, t in enumerate(tuples):
        if gamma_mask >> i & 1:
            doomed.setdefault(t.relation, set()).add(t.values)
    rels = {}
    for name, rel in db.relations.items():
        gone = doomed.get(name)
        rels[name] = rel if not gone else Relation(name, rel.arity,
                                                     {k: m for k, m in rel.rows.items() if k not in gone})
    return Database(rels, db.semantics)


def brute_force(instance: GdpInstance, cap: int = 20) -> OracleResult:
    db = instance.db
    tuples = db.tuples()
    n = len(tuples)
    if n > cap:
        raise OracleCapError(f"{n} distinct tuples exceed the oracle cap of {cap}")
    weights = [tuple_weight(db, t) for t in tuples]
    views = instance.views()
    base = {s.view_id: len(_evaluate(db, s.query)) for s in views}
    identity_rel = {s.view_id: s.query.rules[0].body[0].relation for s in views if s.identity}

    best_obj, best_key, best_mask = None, None, None
    explored = 0
    for i in range(1 << n):
        mask = i ^ (i >> 1)  # Gray code
        explored += 1
        after = _without(db, mask, tuples)
        feasible = True
        objective = 0
        for s in views:
            lost = base[s.view_id] - len(_evaluate(after, s.query))
            if s.role == "del" and lost < s.k:
                feasible = False
                break
            if s.role == "pres" and base[s.view_id] - lost < s.k:
                feasible = False
                break
            if s.role in ("min", "max"):
                if s.view_id in identity_rel:
                    rel = identity_rel[s.view_id]
                    lost = sum(weights[j] for j, t in enumerate(tuples) if mask >> j & 1 and t.relation == rel)
                objective += lost if s.role == "min" else -lost
        if not feasible:
            continue
        key = sorted(tuples[j].sort_key() for j in range(n) if mask >> j & 1)
        if best_obj is None or objective < best_obj or (objective == best_obj and key < best_key):
            best_obj, best_key, best_mask = objective, key, mask
    if best_obj is None:
        return OracleResult(INFEASIBLE, None, explored)
    gamma = tuple(tuples[j] for j in range(n) if best_mask >> j & 1)
    return OracleResult(best_obj, gamma, explored)


def enumerate_binary(model, max_vars: int = 22) -> float | str:
    """Minimum of the model objective over all feasible 0/1 points."""
    n = len(model.variables)
    if n > max_vars:
        raise OracleCapError(f"{n} variables exceed the enumeration cap of {max_vars}")
    idx = model.index
    c = np.zeros(n)
    for v, coef in model.objective.items():
        c[idx[v]] = coef
    rows, rhs, senses = [], [], []
    for con in model.constraints:
        row = np.zeros(n)
        for v, coef in con.terms:
            row[idx[v]] = coef
        rows.append(row)
        rhs.append(con.rhs)
        senses.append(con.sense)
    A = np.array(rows).reshape(-1, n)
    b = np.array(rhs, dtype=float)
    le = np.array([s == "<=" for s in senses], dtype=bool)
    ge = np.array([s == ">=" for s in senses], dtype=bool)
    eq = ~(le | ge)
    best = None
    block = 1 << 15
    shifts = np.arange(n)
    for start in range(0, 1 << n, block):
        codes = np.arange(start, min(start + block, 1 << n))
        points = ((codes[:, None] >> shifts) & 1).astype(float)
        ok = np.ones(len(codes), dtype=bool)
        if len(b):
            act = points @ A.T
            ok &= np.all((act <= b + 1e-9) | ~le, axis=1)
            ok &= np.all((act >= b - 1e-9) | ~ge, axis=1)
            ok &= np.all((np.abs(act - b) <= 1e-9) | ~eq, axis=1)
        if ok.any():
            value = float((points[ok] @ c).min())
            best = value if best is None else min(best, value)
    return INFEASIBLE if best is None else best
