"""Generalized deletion propagation instances, reductions from the classical
variants, config loading, and solver-independent verification.

An instance holds one database and four ordered view lists:

* ``del``  -- (query, k): at least k output tuples must disappear
* ``pres`` -- (query, k): at least k output tuples must survive
* ``min``  -- queries whose lost output tuples are counted as cost
* ``max``  -- queries whose lost output tuples are counted as gain

The objective of an intervention set is ``sum(min deltas) - sum(max deltas)``,
to be minimized. Identity views (``IdR(x..) :- R(x..)``) count a lost tuple
with its bag multiplicity.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .queryir import Query, bind_head, identity_queries, is_identity_query, parse_query_file
from .relcore import Database, TupleRef, delete_tuples, load_database, tuple_weight
from .witness import ProvenanceIndex, ViewTuple, enumerate_witnesses, evaluate

ROLES = ("del", "pres", "min", "max")


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class ViewSpec:
    """One view occurrence. ``k`` is None for min/max views."""
    view_id: str
    role: str
    query: Query
    k: int | None = None
    identity: bool = False


@dataclass
class GdpInstance:
    db: Database
    del_views: list[ViewSpec]
    pres_views: list[ViewSpec]
    min_views: list[ViewSpec]
    max_views: list[ViewSpec]
    variant: str = "generic"
    source_query: Query | None = None
    target: tuple | None = None
    _prov: dict = field(default_factory=dict, repr=False, compare=False)

    def views(self) -> list[ViewSpec]:
        return [*self.del_views, *self.pres_views, *self.min_views, *self.max_views]

    def view(self, view_id: str) -> ViewSpec:
        for v in self.views():
            if v.view_id == view_id:
                return v
        raise KeyError(view_id)

    def provenance(self, spec: ViewSpec | str) -> ProvenanceIndex:
        if isinstance(spec, str):
            spec = self.view(spec)
        idx = self._prov.get(spec.view_id)
        if idx is None:
            idx = enumerate_witnesses(self.db, spec.view_id, spec.query)
            self._prov[spec.view_id] = idx
        return idx

    def describe(self) -> dict:
        return {
            "variant": self.variant,
            "semantics": self.db.semantics.value,
            "tuples": len(self.db),
            "views": [{"id": v.view_id, "role": v.role, "query": str(v.query), "k": v.k,
                       "identity": v.identity} for v in self.views()],
        }


def _as_pair(entry) -> tuple[Query, int]:
    if isinstance(entry, ViewSpec):
        return entry.query, entry.k
    q, k = entry
    return q, k


def _as_query(entry) -> Query:
    return entry.query if isinstance(entry, ViewSpec) else entry


def make_instance(
    db: Database,
    del_views: Sequence = (),
    pres_views: Sequence = (),
    min_views: Sequence = (),
    max_views: Sequence = (),
    variant: str = "generic",
    source_query: Query | None = None,
    target: tuple | None = None,
) -> GdpInstance:
    """Build and validate an instance.

    ``del_views``/``pres_views`` take ``(query, k)`` pairs, ``min_views``/
    ``max_views`` take queries. View ids are ``del0, del1, ..., max0, ...``.
    """
    def identity(q: Query) -> bool:
        if not is_identity_query(q):
            return False
        rel = db.relations.get(q.rules[0].body[0].relation)
        return rel is not None and rel.arity == q.head_arity

    dels = [ViewSpec(f"del{i}", "del", q, int(k), identity(q)) for i, (q, k) in enumerate(map(_as_pair, del_views))]
    pres = [ViewSpec(f"pres{i}", "pres", q, int(k), identity(q)) for i, (q, k) in enumerate(map(_as_pair, pres_views))]
    mins = [ViewSpec(f"min{i}", "min", q, None, identity(q)) for i, q in enumerate(map(_as_query, min_views))]
    maxs = [ViewSpec(f"max{i}", "max", q, None, identity(q)) for i, q in enumerate(map(_as_query, max_views))]
    inst = GdpInstance(db, dels, pres, mins, maxs, variant, source_query, target)
    for spec in dels:
        n = len(inst.provenance(spec))
        if not 1 <= spec.k <= n:
            raise InstanceError(f"{spec.view_id}: k={spec.k} outside [1, {n}] for {spec.query.name}")
    for spec in pres:
        n = len(inst.provenance(spec))
        if not 0 <= spec.k <= n:
            raise InstanceError(f"{spec.view_id}: k={spec.k} outside [0, {n}] for {spec.query.name}")
    for spec in inst.views():
        inst.provenance(spec)  # surfaces schema errors early
    return inst


# ---------------------------------------------------------------------------
# reductions


def _target_values(target) -> tuple:
    if isinstance(target, ViewTuple):
        return target.values
    return tuple(target)


def _require_in_view(db: Database, q: Query, target: tuple) -> None:
    if target not in evaluate(db, q):
        raise InstanceError(f"target {q.name}{target} is not in the view")


def make_dpss(db: Database, q: Query, target) -> GdpInstance:
    """Delete ``target`` from q(db) with the fewest source deletions."""
    t = _target_values(target)
    _require_in_view(db, q, t)
    return make_instance(db, del_views=[(bind_head(q, t), 1)], min_views=identity_queries(db),
                         variant="dpss", source_query=q, target=t)


def make_resilience(db: Database, q: Query) -> GdpInstance:
    if not q.is_boolean:
        raise InstanceError(f"resilience needs a Boolean query, {q.name} has arity {q.head_arity}")
    if not evaluate(db, q):
        raise InstanceError(f"{q.name} is false on the database, nothing to delete")
    return make_instance(db, del_views=[(q, 1)], min_views=identity_queries(db),
                         variant="res", source_query=q, target=())


def make_dpvs(db: Database, q: Query, target) -> GdpInstance:
    """Delete ``target`` from q(db) losing as few other view tuples as possible.

    The target itself sits in the min view, so a side-effect-free solution
    has objective 1.
    """
    t = _target_values(target)
    _require_in_view(db, q, t)
    return make_instance(db, del_views=[(bind_head(q, t), 1)], min_views=[q],
                         variant="dpvs", source_query=q, target=t)


def make_adpss(db: Database, q: Query, k: int) -> GdpInstance:
    n = len(evaluate(db, q))
    if not 1 <= k <= n:
        raise InstanceError(f"k={k} outside [1, {n}]")
    return make_instance(db, del_views=[(q, k)], min_views=identity_queries(db),
                         variant="adpss", source_query=q)


def make_swp(db: Database, q: Query) -> GdpInstance:
    """Keep every output tuple of q while deleting as much of the source as possible."""
    n = len(evaluate(db, q))
    return make_instance(db, pres_views=[(q, n)], max_views=identity_queries(db),
                         variant="swp", source_query=q)


def median_witness_target(db: Database, q: Query) -> tuple:
    """The view tuple whose witness count is the (lower) median; ties by value order."""
    idx = enumerate_witnesses(db, "q", q)
    if not idx.view_tuples:
        raise InstanceError(f"{q.name} has an empty view")
    order = sorted(range(len(idx.view_tuples)), key=lambda i: (len(idx.view_witnesses[i]), i))
    return idx.view_tuples[order[(len(order) - 1) // 2]].values


# ---------------------------------------------------------------------------
# config loading


def _resolve_k(entry: dict, n: int, where: str) -> int:
    if "k" in entry:
        return int(entry["k"])
    if "k_percent" in entry:
        return math.ceil(float(entry["k_percent"]) * n / 100.0 - 1e-9)
    raise InstanceError(f"{where}: needs 'k' or 'k_percent'")


def load_instance(config_path: str | os.PathLike) -> GdpInstance:
    """Load a generic instance from a JSON config.

    ``{"database": "db/manifest.json",
       "del":  [{"query": "q1.dl", "k": 2} | {"query": ..., "k_percent": 2.0}],
       "pres": [...],
       "min":  [{"query": "q2.dl"} | {"identity": true}],
       "max":  [...]}``

    ``{"identity": true}`` expands to one identity view per relation.
    Paths are relative to the config file.
    """
    path = Path(config_path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceError(f"cannot read instance config {path}: {exc}") from exc
    base = path.parent
    if "database" not in cfg:
        raise InstanceError(f"{path}: missing 'database'")
    db = load_database(base / cfg["database"], header=bool(cfg.get("header", False)))

    def query(entry: dict, where: str) -> Query:
        if "query" not in entry:
            raise InstanceError(f"{where}: missing 'query'")
        qpath = base / entry["query"]
        if not qpath.exists():
            raise InstanceError(f"{where}: missing query file {qpath}")
        return parse_query_file(qpath)

    lists: dict[str, list] = {r: [] for r in ROLES}
    for role in ("del", "pres"):
        for i, entry in enumerate(cfg.get(role, [])):
            where = f"{path}: {role}[{i}]"
            q = query(entry, where)
            n = len(evaluate(db, q))
            lists[role].append((q, _resolve_k(entry, n, where)))
    for role in ("min", "max"):
        for i, entry in enumerate(cfg.get(role, [])):
            if entry.get("identity"):
                lists[role].extend(identity_queries(db))
            else:
                lists[role].append(query(entry, f"{path}: {role}[{i}]"))
    return make_instance(db, lists["del"], lists["pres"], lists["min"], lists["max"],
                         variant=cfg.get("variant", "generic"))


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    feasible: bool
    deltas: dict[str, int]
    objective: int
    violated_constraints: list[str]

    def to_json(self) -> dict:
        return {"feasible": self.feasible, "objective": self.objective,
                "deltas": self.deltas, "violated_constraints": self.violated_constraints}


def view_delta(db: Database, after: Database, spec: ViewSpec, gamma: Iterable[TupleRef]) -> int:
    """Lost output of one view; identity views weigh a lost tuple by multiplicity."""
    if spec.identity:
        rel = spec.query.rules[0].body[0].relation
        return sum(tuple_weight(db, t) for t in gamma if t.relation == rel)
    return len(evaluate(db, spec.query)) - len(evaluate(after, spec.query))


def verify(instance: GdpInstance, gamma: Iterable[TupleRef]) -> VerificationReport:
    """Recompute every view on db minus gamma and check the hard constraints."""
    gamma = set(gamma)
    db = instance.db
    after = delete_tuples(db, gamma)
    deltas: dict[str, int] = {}
    violated = []
    for spec in instance.views():
        lost = len(evaluate(db, spec.query)) - len(evaluate(after, spec.query))
        deltas[spec.view_id] = view_delta(db, after, spec, gamma) if spec.identity else lost
        if spec.role == "del" and lost < spec.k:
            violated.append(f"{spec.view_id}: deleted {lost} < k={spec.k}")
        elif spec.role == "pres":
            kept = len(evaluate(db, spec.query)) - lost
            if kept < spec.k:
                violated.append(f"{spec.view_id}: kept {kept} < k={spec.k}")
    objective = (sum(deltas[v.view_id] for v in instance.min_views)
                 - sum(deltas[v.view_id] for v in instance.max_views))
    return VerificationReport(not violated, deltas, objective, violated)
