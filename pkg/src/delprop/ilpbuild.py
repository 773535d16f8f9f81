"""Compile a GDP instance into a 0/1 integer program.

Variables: one per database tuple (1 = deleted), one per witness of each view
occurrence (1 = destroyed) and one per view tuple (1 = lost from the view).
All constraints are stored in the normalized forms

    PC1  X[t] - X[w] <= 0                      t in w
    PC2  sum_{t in w} X[t] - X[w] >= 0
    PC3  sum_{w over v} X[w] - X[v] <= n_w - 1
    PC4  X[w] - X[v] >= 0                      w over v
    SC   X[t] - sum_{w over v, t in w} X[w] <= 1 - n
    UC_DEL   sum X[v] >= k
    UC_PRES  sum X[v] <= |view| - k
    FORCED   X[v] >= 1                         v necessarily lost

Three formulations differ in which of these they emit per view role:

    mode      del / max     pres               min
    naive     PC1-PC4       PC1-PC4            PC1-PC4
    wildcard  PC2, PC4      PC1, PC3           PC1, PC3
    smoothed  PC2, PC4      SC, PC1, PC3 (*)   PC1, PC3

(*) PC1 rows dominated by an SC over at least two witnesses are dropped by
``prune_subsumed``; where a (view tuple, tuple) pair has a single covering
witness the SC would coincide with PC1 and only PC1 is kept.

A deletion view with k equal to its size forces every one of its witnesses to
be destroyed. Such views are folded into one covering row per witness, and any
pres/min view tuple all of whose witnesses contain a forced witness is marked
lost with a FORCED row (this is implied for integral points, so the ILP
optimum is unchanged while the relaxation is tightened).
"""

from __future__ import annotations

import copy
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

from .gdpmodel import GdpInstance, ViewSpec
from .relcore import TupleRef, tuple_weight

TAGS = ("UC_DEL", "UC_PRES", "PC1", "PC2", "PC3", "PC4", "SC", "FORCED")


class Mode(str, Enum):
    NAIVE = "naive"
    WILDCARD = "wildcard"
    SMOOTHED = "smoothed"


class VarId(NamedTuple):
    kind: str  # "T", "W" or "V"
    key: tuple

    def __str__(self) -> str:
        if self.kind == "T":
            return f"X[{TupleRef(*self.key)}]"
        return f"X[{self.kind.lower()}:{self.key[0]}#{self.key[1]}]"


def tuple_var(t: TupleRef) -> VarId:
    return VarId("T", (t.relation, tuple(t.values)))


def witness_var(view_id: str, wi: int) -> VarId:
    return VarId("W", (view_id, wi))


def view_var(view_id: str, vi: int) -> VarId:
    return VarId("V", (view_id, vi))


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple[tuple[VarId, int], ...]
    sense: str  # "<=", ">=" or "="
    rhs: int
    tag: str
    # (view_id, view-tuple index, tuple) for PC1/SC rows; used by pruning
    anchor: tuple | None = None

    def __post_init__(self):
        seen = set()
        for v, _ in self.terms:
            if v in seen:
                raise ValueError(f"duplicate variable {v} in {self.tag} constraint")
            seen.add(v)

    def activity(self, x) -> float:
        return sum(c * x[v] for v, c in self.terms)

    def satisfied(self, x, tol: float = 1e-7) -> bool:
        a = self.activity(x)
        if self.sense == "<=":
            return a <= self.rhs + tol
        if self.sense == ">=":
            return a >= self.rhs - tol
        return abs(a - self.rhs) <= tol

    def __str__(self) -> str:
        lhs = " ".join(f"{'+' if c >= 0 else '-'} {abs(c) if abs(c) != 1 else ''}{v}" for v, c in self.terms)
        return f"[{self.tag}] {lhs.lstrip('+ ')} {self.sense} {self.rhs}"


@dataclass
class IlpModel:
    variables: list[VarId]
    objective: dict[VarId, int]
    constraints: list[LinearConstraint]
    mode: Mode
    integral: bool = True
    # view_id -> role, for naming and reporting
    view_roles: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.index = {v: i for i, v in enumerate(self.variables)}
        for c in self.constraints:
            for v, _ in c.terms:
                if v not in self.index:
                    raise ValueError(f"constraint references undeclared variable {v}")
        for v in self.objective:
            if v not in self.index:
                raise ValueError(f"objective references undeclared variable {v}")

    def objective_value(self, x) -> float:
        return sum(c * x[v] for v, c in self.objective.items())

    def tuple_variables(self) -> list[VarId]:
        return [v for v in self.variables if v.kind == "T"]


# ---------------------------------------------------------------------------
# building


def _emit_view(spec: ViewSpec, instance: GdpInstance, mode: Mode, fold_forced: bool,
               out: list[LinearConstraint], used: set) -> None:
    prov = instance.provenance(spec)
    vid = spec.view_id
    n_view = len(prov.view_tuples)
    role = spec.role
    W = lambda wi: witness_var(vid, wi)  # noqa: E731
    V = lambda vi: view_var(vid, vi)  # noqa: E731

    if role == "del" and fold_forced and spec.k == n_view:
        # every view tuple and hence every witness must go: X[v] = X[w] = 1,
        # leaving one covering row per witness
        for w in prov.witnesses:
            terms = tuple((tuple_var(t), 1) for t in w.tuples)
            used.update(v for v, _ in terms)
            out.append(LinearConstraint(terms, ">=", 1, "PC2"))
        return

    if mode is Mode.NAIVE:
        pcs = {"PC1", "PC2", "PC3", "PC4"}
    elif role in ("del", "max"):
        pcs = {"PC2", "PC4"}
    else:
        pcs = {"PC1", "PC3"}
    smooth = mode is Mode.SMOOTHED and role == "pres"

    rows: list[LinearConstraint] = []
    if role == "del":
        rows.append(LinearConstraint(tuple((V(vi), 1) for vi in range(n_view)), ">=", spec.k, "UC_DEL"))
    elif role == "pres" and n_view:
        rows.append(LinearConstraint(tuple((V(vi), 1) for vi in range(n_view)), "<=", n_view - spec.k, "UC_PRES"))

    for vi in range(n_view):
        wis = prov.view_witnesses[vi]
        for wi in wis:
            w = prov.witnesses[wi]
            if "PC1" in pcs:
                for t in w.tuples:
                    rows.append(LinearConstraint(((tuple_var(t), 1), (W(wi), -1)), "<=", 0, "PC1", (vid, vi, t)))
            if "PC2" in pcs:
                rows.append(LinearConstraint(tuple((tuple_var(t), 1) for t in w.tuples) + ((W(wi), -1),),
                                             ">=", 0, "PC2"))
            if "PC4" in pcs:
                rows.append(LinearConstraint(((W(wi), 1), (V(vi), -1)), ">=", 0, "PC4"))
        if "PC3" in pcs:
            rows.append(LinearConstraint(tuple((W(wi), 1) for wi in wis) + ((V(vi), -1),),
                                         "<=", len(wis) - 1, "PC3"))
        if smooth:
            covering: dict[TupleRef, list[int]] = {}
            for wi in wis:
                for t in prov.witnesses[wi].tuples:
                    covering.setdefault(t, []).append(wi)
            for t in sorted(covering, key=TupleRef.sort_key):
                ws = covering[t]
                if len(ws) < 2:
                    continue
                rows.append(LinearConstraint(((tuple_var(t), 1),) + tuple((W(wi), -1) for wi in ws),
                                             "<=", 1 - len(ws), "SC", (vid, vi, t)))
    for r in rows:
        used.update(v for v, _ in r.terms)
    out.extend(rows)


def _forced_sets(instance: GdpInstance, fold_forced: bool) -> list[frozenset]:
    out = []
    if not fold_forced:
        return out
    for spec in instance.del_views:
        prov = instance.provenance(spec)
        if spec.k == len(prov.view_tuples):
            out.extend(frozenset(w.tuples) for w in prov.witnesses)
    return out


def _forced_rows(spec: ViewSpec, instance: GdpInstance, forced: list[frozenset]) -> list[LinearConstraint]:
    by_tuple: dict[TupleRef, list[frozenset]] = {}
    for fs in forced:
        for t in fs:
            by_tuple.setdefault(t, []).append(fs)
    prov = instance.provenance(spec)
    rows = []
    for vi, wis in enumerate(prov.view_witnesses):
        def destroyed(wi: int) -> bool:
            ts = set(prov.witnesses[wi].tuples)
            return any(fs <= ts for t in ts for fs in by_tuple.get(t, ()))
        if all(destroyed(wi) for wi in wis):
            rows.append(LinearConstraint(((view_var(spec.view_id, vi), 1),), ">=", 1, "FORCED"))
    return rows


def build(instance: GdpInstance, mode: Mode | str = Mode.SMOOTHED, collapse_identity: bool = True,
          prune: bool = True, fold_forced: bool = True) -> IlpModel:
    """Compile ``instance`` into an ILP (minimization, all variables binary).

    ``collapse_identity`` puts the objective weight of identity min/max views
    directly on tuple variables. ``fold_forced`` simplifies deletion views whose
    k equals the view size to one covering row per witness. ``prune`` applies
    :func:`prune_subsumed`.
    """
    mode = Mode(mode)
    db = instance.db
    constraints: list[LinearConstraint] = []
    used: set[VarId] = set()
    objective: Counter = Counter()
    forced = _forced_sets(instance, fold_forced)

    for spec in instance.views():
        collapsed = collapse_identity and spec.identity and spec.role in ("min", "max")
        sign = 1 if spec.role == "min" else -1
        if collapsed:
            prov = instance.provenance(spec)
            rel = spec.query.rules[0].body[0].relation
            for vt in prov.view_tuples:
                t = TupleRef(rel, vt.values)
                objective[tuple_var(t)] += sign * tuple_weight(db, t)
            continue
        _emit_view(spec, instance, mode, fold_forced, constraints, used)
        if forced and spec.role in ("pres", "min"):
            rows = _forced_rows(spec, instance, forced)
            constraints.extend(rows)
            used.update(v for r in rows for v, _ in r.terms)
        if spec.role in ("min", "max"):
            prov = instance.provenance(spec)
            rel = spec.query.rules[0].body[0].relation if spec.identity else None
            for vi, vt in enumerate(prov.view_tuples):
                weight = tuple_weight(db, TupleRef(rel, vt.values)) if spec.identity else 1
                objective[view_var(spec.view_id, vi)] += sign * weight
                used.add(view_var(spec.view_id, vi))

    objective = {v: c for v, c in objective.items() if c != 0}
    used.update(objective)
    model = IlpModel(_order_variables(instance, used), objective, constraints, mode,
                     view_roles={v.view_id: v.role for v in instance.views()})
    return prune_subsumed(model) if prune else model


def _order_variables(instance: GdpInstance, used: set[VarId]) -> list[VarId]:
    view_pos = {v.view_id: i for i, v in enumerate(instance.views())}
    kind_pos = {"T": 0, "W": 1, "V": 2}

    def key(v: VarId):
        if v.kind == "T":
            return (0, TupleRef(*v.key).sort_key())
        return (kind_pos[v.kind], (view_pos[v.key[0]], v.key[1]))

    return sorted(used, key=key)


def lp_relaxation(model: IlpModel) -> IlpModel:
    """Same model with integrality dropped; bounds stay [0, 1]."""
    out = copy.copy(model)
    out.integral = False
    return out


def prune_subsumed(model: IlpModel) -> IlpModel:
    """Drop PC1 rows implied by an SC over the same (view tuple, tuple) with >= 2 witnesses."""
    covered = {c.anchor for c in model.constraints if c.tag == "SC" and len(c.terms) >= 3}
    if not covered:
        return model
    kept = [c for c in model.constraints if not (c.tag == "PC1" and c.anchor in covered)]
    out = replace(model, constraints=kept)
    return out


def model_stats(model: IlpModel) -> dict:
    by_tag = Counter(c.tag for c in model.constraints)
    return {
        "mode": model.mode.value,
        "variables": len(model.variables),
        "tuple_variables": sum(1 for v in model.variables if v.kind == "T"),
        "witness_variables": sum(1 for v in model.variables if v.kind == "W"),
        "view_variables": sum(1 for v in model.variables if v.kind == "V"),
        "constraints": len(model.constraints),
        "by_tag": {t: by_tag.get(t, 0) for t in TAGS},
        "nonzeros": sum(len(c.terms) for c in model.constraints),
        "objective_terms": len(model.objective),
    }
