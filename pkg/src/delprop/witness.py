"""Witness enumeration and provenance maps.

A witness is a satisfying valuation of all variables of one rule. Its view
tuple is the restriction of the valuation to the head variables. Evaluation
is atom-at-a-time, left to right, probing hash indexes keyed on the positions
already bound (constants and previously bound variables).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .queryir import Const, Query, Rule, Var
from .relcore import Database, TupleRef, delete_tuples, values_key


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class Witness:
    view_id: str
    rule_index: int
    valuation: tuple
    tuples: tuple[TupleRef, ...]  # deduplicated, sorted

    def to_json(self) -> dict:
        return {"rule": self.rule_index, "valuation": list(self.valuation),
                "tuples": [str(t) for t in self.tuples]}


@dataclass(frozen=True)
class ViewTuple:
    view_id: str
    values: tuple

    def __str__(self) -> str:
        from .relcore import format_constant
        return f"{self.view_id}({','.join(format_constant(c) for c in self.values)})"


@dataclass
class ProvenanceIndex:
    view_id: str
    query: Query
    witnesses: list[Witness]
    view_tuples: list[ViewTuple]
    view_witnesses: list[list[int]]  # view-tuple index -> witness indexes
    witness_view: list[int]  # witness index -> view-tuple index
    tuple_witnesses: dict[TupleRef, list[int]] = field(default_factory=dict)

    def witness_tuples(self, wi: int) -> tuple[TupleRef, ...]:
        return self.witnesses[wi].tuples

    def view_index(self, values) -> int:
        values = tuple(values)
        for i, vt in enumerate(self.view_tuples):
            if vt.values == values:
                return i
        raise KeyError(f"{values} is not in view {self.view_id}")

    def __len__(self) -> int:
        return len(self.view_tuples)

    def to_json(self) -> dict:
        return {
            "view_id": self.view_id,
            "query": str(self.query),
            "view_tuples": [list(v.values) for v in self.view_tuples],
            "witnesses": [dict(w.to_json(), view=self.witness_view[i]) for i, w in enumerate(self.witnesses)],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _check_schema(db: Database, q: Query) -> None:
    for rule in q.rules:
        for atom in rule.body:
            rel = db.relations.get(atom.relation)
            if rel is None:
                raise EvaluationError(f"unknown relation {atom.relation} in {q.name}")
            if rel.arity != atom.arity:
                raise EvaluationError(f"atom {atom} has arity {atom.arity}, relation {rel.name} has {rel.arity}")


def _rule_valuations(db: Database, rule: Rule) -> Iterator[dict]:
    """Yield every satisfying valuation of ``rule`` over ``db``."""
    indexes: dict[tuple, dict] = {}

    def index(rel_name: str, positions: tuple[int, ...]) -> dict:
        key = (rel_name, positions)
        idx = indexes.get(key)
        if idx is None:
            idx = {}
            for row in db.relations[rel_name].rows:
                idx.setdefault(tuple(row[p] for p in positions), []).append(row)
            indexes[key] = idx
        return idx

    body = rule.body

    def extend(i: int, binding: dict) -> Iterator[dict]:
        if i == len(body):
            yield binding
            return
        atom = body[i]
        bound_pos, probe = [], []
        for p, t in enumerate(atom.terms):
            if isinstance(t, Const):
                bound_pos.append(p)
                probe.append(t.value)
            elif t.name in binding:
                bound_pos.append(p)
                probe.append(binding[t.name])
        for row in index(atom.relation, tuple(bound_pos)).get(tuple(probe), ()):
            new = binding
            ok = True
            for p, t in enumerate(atom.terms):
                if isinstance(t, Var):
                    cur = new.get(t.name, _MISSING)
                    if cur is _MISSING:
                        if new is binding:
                            new = dict(binding)
                        new[t.name] = row[p]
                    elif cur != row[p] or type(cur) is not type(row[p]):
                        ok = False
                        break
            if ok:
                yield from extend(i + 1, new)

    yield from extend(0, {})


_MISSING = object()


def _ground_tuples(rule: Rule, binding: dict) -> tuple[TupleRef, ...]:
    out = set()
    for atom in rule.body:
        out.add(TupleRef(atom.relation, tuple(t.value if isinstance(t, Const) else binding[t.name]
                                              for t in atom.terms)))
    return tuple(sorted(out, key=TupleRef.sort_key))


def enumerate_witnesses(db: Database, view_id: str, q: Query) -> ProvenanceIndex:
    """Evaluate the full version of ``q`` and build the provenance maps."""
    _check_schema(db, q)
    found: dict[tuple, tuple] = {}
    for ri, rule in enumerate(q.rules):
        order = rule.variables()
        for binding in _rule_valuations(db, rule):
            val = tuple(binding[v] for v in order)
            found.setdefault((ri, val), (len(rule.head_vars), _ground_tuples(rule, binding)))

    keys = sorted(found, key=lambda k: (k[0], values_key(k[1])))
    heads = sorted({k[1][:found[k][0]] for k in keys}, key=values_key)
    head_index = {h: i for i, h in enumerate(heads)}
    witnesses, witness_view = [], []
    view_witnesses: list[list[int]] = [[] for _ in heads]
    tuple_witnesses: dict[TupleRef, list[int]] = {}
    for wi, key in enumerate(keys):
        ri, val = key
        n_head, tuples = found[key]
        witnesses.append(Witness(view_id, ri, val, tuples))
        vi = head_index[val[:n_head]]
        witness_view.append(vi)
        view_witnesses[vi].append(wi)
        for t in tuples:
            tuple_witnesses.setdefault(t, []).append(wi)
    return ProvenanceIndex(
        view_id=view_id,
        query=q,
        witnesses=witnesses,
        view_tuples=[ViewTuple(view_id, h) for h in heads],
        view_witnesses=view_witnesses,
        witness_view=witness_view,
        tuple_witnesses=tuple_witnesses,
    )


def evaluate(db: Database, q: Query) -> set[tuple]:
    """The set of output tuples ``q(db)``."""
    _check_schema(db, q)
    out = set()
    for rule in q.rules:
        for binding in _rule_valuations(db, rule):
            out.add(tuple(binding[v] for v in rule.head_vars))
    return out


def evaluate_count(db: Database, q: Query) -> int:
    return len(evaluate(db, q))


def delta_count(db: Database, q: Query, gamma: Iterable[TupleRef]) -> int:
    """``|q(db)| - |q(db minus gamma)|``."""
    return evaluate_count(db, q) - evaluate_count(delete_tuples(db, gamma), q)
