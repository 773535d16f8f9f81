"""Syntactic tractability analysis of queries.

Criteria implemented, all for self-join-free conjunctive queries:

* existential graph: atoms with a non-head variable, joined when they share one
* head clustering: within each component all atoms carry the same head variables
* head domination: for each component some atom of the query contains every
  head variable occurring in that component
* triad (on the query with head variables removed): after marking dominated
  atoms exogenous (B is dominated when another atom's variables are a subset of
  B's; of two atoms with equal variable sets the first stays), three endogenous
  atoms such that every two are joined by a path whose shared variables avoid
  the third atom's variables
* linear: some ordering of the atoms keeps each variable's occurrences contiguous

The union ``Q(x) :- R(x,a,b), R(x,b,c), R(x,c,a).  Q(x) :- R(x,e,f), R(x,f,g).``
(up to renaming) is recognized separately.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .queryir import Atom, Query, Rule, Var, parse_query
from .relcore import Semantics

PTIME, HARD, UNKNOWN = "PTIME", "HARD", "UNKNOWN"
VARIANTS = ("DP-SS", "DP-VS", "ADP-SS", "SWP")


@dataclass
class ExistentialGraph:
    nodes: list[int]  # atom positions in the rule body
    edges: set[tuple[int, int]]
    components: list[list[int]]


def _atom_vars(atom: Atom) -> frozenset:
    return frozenset(t.name for t in atom.terms if isinstance(t, Var))


def _components(nodes: Sequence[int], adjacent) -> list[list[int]]:
    seen, comps = set(), []
    for start in nodes:
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            a = stack.pop()
            comp.append(a)
            for b in nodes:
                if b not in seen and adjacent(a, b):
                    seen.add(b)
                    stack.append(b)
        comps.append(sorted(comp))
    return comps


def existential_graph(rule: Rule, head_vars: Sequence[str] | None = None) -> ExistentialGraph:
    head = set(rule.head_vars if head_vars is None else head_vars)
    ex = [_atom_vars(a) - head for a in rule.body]
    nodes = [i for i, vs in enumerate(ex) if vs]
    edges = {(i, j) for i, j in itertools.combinations(nodes, 2) if ex[i] & ex[j]}
    comps = _components(nodes, lambda a, b: (min(a, b), max(a, b)) in edges)
    return ExistentialGraph(nodes, edges, comps)


def _single_rule(q: Query) -> Rule:
    if len(q.rules) != 1:
        raise ValueError(f"{q.name} is a union; the criterion is defined for single-rule queries")
    return q.rules[0]


def head_clustering(q: Query) -> bool:
    rule = _single_rule(q)
    head = set(rule.head_vars)
    for comp in existential_graph(rule).components:
        sets = {_atom_vars(rule.body[i]) & head for i in comp}
        if len(sets) > 1:
            return False
    return True


def head_domination(q: Query) -> bool:
    rule = _single_rule(q)
    head = set(rule.head_vars)
    atom_vars = [_atom_vars(a) for a in rule.body]
    for comp in existential_graph(rule).components:
        needed = set().union(*(atom_vars[i] & head for i in comp))
        if not any(needed <= vs for vs in atom_vars):
            return False
    return True


# ---------------------------------------------------------------------------
# Boolean criteria over variable sets


def _existential_sets(rule: Rule) -> list[frozenset]:
    head = set(rule.head_vars)
    return [_atom_vars(a) - head for a in rule.body]


def endogenous_atoms(sets: Sequence[frozenset]) -> list[int]:
    out = []
    for b, vb in enumerate(sets):
        dominated = any(a != b and (sets[a] < vb or (sets[a] == vb and a < b)) for a in range(len(sets)))
        if not dominated:
            out.append(b)
    return out


def _connected_avoiding(sets: Sequence[frozenset], src: int, dst: int, avoid: frozenset) -> bool:
    seen, stack = {src}, [src]
    while stack:
        a = stack.pop()
        if a == dst:
            return True
        for b in range(len(sets)):
            if b not in seen and (sets[a] & sets[b]) - avoid:
                seen.add(b)
                stack.append(b)
    return False


def find_triad(sets: Sequence[frozenset]) -> tuple[int, int, int] | None:
    endo = endogenous_atoms(sets)
    for trio in itertools.combinations(endo, 3):
        ok = True
        for i, j, k in ((trio[0], trio[1], trio[2]), (trio[0], trio[2], trio[1]), (trio[1], trio[2], trio[0])):
            if not _connected_avoiding(sets, i, j, sets[k]):
                ok = False
                break
        if ok:
            return trio
    return None


def has_triad(q: Query) -> bool:
    """Triad test on the query with its head variables removed."""
    return find_triad(_existential_sets(_single_rule(q))) is not None


def linear_order(sets: Sequence[frozenset]) -> list[int] | None:
    """An atom ordering in which every variable occurs contiguously, if any."""
    n = len(sets)
    all_vars = set().union(*sets) if sets else set()

    def extend(order: list[int], closed: set, open_vars: frozenset):
        if len(order) == n:
            return order
        for a in range(n):
            if a in order:
                continue
            vs = sets[a]
            if vs & closed:
                continue
            # variables open before but absent here close now
            newly_closed = open_vars - vs
            res = extend(order + [a], closed | newly_closed, vs)
            if res is not None:
                return res
        return None

    if not all_vars:
        return list(range(n))
    return extend([], set(), frozenset())


def is_linear(q: Query) -> bool:
    return linear_order(_existential_sets(_single_rule(q))) is not None


# ---------------------------------------------------------------------------
# ADP-SS recursion


def singleton_atom(sets: Sequence[frozenset], head: frozenset) -> int | None:
    for r, vr in enumerate(sets):
        if all(vr <= vs for s, vs in enumerate(sets) if s != r) and (vr <= head or vr >= head):
            return r
    return None


def adp_tractable(sets: Sequence[frozenset], head: frozenset) -> tuple[bool, str]:
    sets = list(sets)
    if not head:
        trio = find_triad(sets)
        return (trio is None, "Boolean, triad-free" if trio is None else f"Boolean with triad at atoms {trio}")
    r = singleton_atom(sets, head)
    if r is not None:
        return True, f"singleton atom {r}"
    universal = sorted(v for v in head if all(v in vs for vs in sets))
    if universal:
        u = frozenset(universal)
        ok, why = adp_tractable([vs - u for vs in sets], head - u)
        return ok, f"strip universal {','.join(universal)}; {why}"
    comps = _components(range(len(sets)), lambda a, b: bool(sets[a] & sets[b]))
    if len(comps) > 1:
        reasons = []
        for comp in comps:
            sub = [sets[i] for i in comp]
            ok, why = adp_tractable(sub, head & frozenset().union(*sub))
            reasons.append(why)
            if not ok:
                return False, f"component {comp}: {why}"
        return True, "components: " + " | ".join(reasons)
    return False, "connected, no universal head variable, no singleton atom"


# ---------------------------------------------------------------------------
# the self-join union with a recognized tractable case

_TRIANGLE_UNION = parse_query(
    "Q(x) :- R(x, a, b), R(x, b, c), R(x, c, a).\n"
    "Q(x) :- R(x, e, f), R(x, f, g).\n"
)


def _canonical(rules: Sequence[Rule]) -> tuple:
    rel_names: dict[str, int] = {}
    out = []
    for rule in rules:
        names: dict[str, int] = {}
        for v in rule.head_vars:
            names.setdefault(v, len(names))
        atoms = []
        for atom in rule.body:
            rel = rel_names.setdefault(atom.relation, len(rel_names))
            terms = []
            for t in atom.terms:
                if isinstance(t, Var):
                    terms.append(("v", names.setdefault(t.name, len(names))))
                else:
                    terms.append(("c", repr(t.value)))
            atoms.append((rel, tuple(terms)))
        out.append((len(rule.head_vars), tuple(atoms)))
    return tuple(out)


def _all_canonical_forms(q: Query) -> set:
    forms = set()
    for rule_order in itertools.permutations(q.rules):
        per_rule = [list(itertools.permutations(r.body)) for r in rule_order]
        for bodies in itertools.product(*per_rule):
            forms.add(_canonical([Rule(r.head_vars, b) for r, b in zip(rule_order, bodies)]))
    return forms


_TRIANGLE_UNION_FORMS = _all_canonical_forms(_TRIANGLE_UNION)


def is_triangle_union(q: Query) -> bool:
    """Alpha-equivalence with the recognized self-join union."""
    if len(q.rules) != 2 or sorted(len(r.body) for r in q.rules) != [2, 3] or q.head_arity != 1:
        return False
    return _canonical(q.rules) in _TRIANGLE_UNION_FORMS


# ---------------------------------------------------------------------------
# reports


@dataclass
class Verdict:
    verdict: str
    reason: str


@dataclass
class TractabilityReport:
    query: str
    semantics: str
    verdicts: dict[str, Verdict] = field(default_factory=dict)
    variant: str | None = None

    def to_json(self) -> dict:
        return {"query": self.query, "semantics": self.semantics, "variant": self.variant,
                "verdicts": {k: {"verdict": v.verdict, "reason": v.reason} for k, v in self.verdicts.items()}}


def classify_query(q: Query, semantics: Semantics | str = Semantics.SET) -> TractabilityReport:
    sem = Semantics(semantics)
    report = TractabilityReport(str(q), sem.value)
    v = report.verdicts

    if is_triangle_union(q):
        why = "self-join union recognized as tractable under bag semantics"
        v["DP-SS"] = Verdict(UNKNOWN, "self-join union; no criterion for this variant")
        v["DP-VS"] = Verdict(PTIME, why)
        v["ADP-SS"] = Verdict(UNKNOWN, "self-join union; no criterion for this variant")
        v["SWP"] = Verdict(PTIME, why)
        return report
    if not q.is_self_join_free_cq():
        why = "union" if len(q.rules) > 1 else "self-join"
        for name in VARIANTS:
            v[name] = Verdict(UNKNOWN, f"{why}: criteria cover self-join-free conjunctive queries only")
        return report

    rule = q.rules[0]
    sets = _existential_sets(rule)

    trio = find_triad(sets)
    if sem is Semantics.SET:
        v["DP-SS"] = (Verdict(PTIME, "existential query has no triad") if trio is None
                      else Verdict(HARD, f"triad at atoms {trio}"))
    else:
        order = linear_order(sets)
        if order is not None:
            v["DP-SS"] = Verdict(PTIME, f"existential query is linear (order {order})")
        elif trio is not None:
            v["DP-SS"] = Verdict(HARD, f"triad at atoms {trio}")
        else:
            v["DP-SS"] = Verdict(UNKNOWN, "triad-free but not linear under bag semantics")

    v["DP-VS"] = (Verdict(PTIME, "head domination") if head_domination(q)
                  else Verdict(HARD, "a component's head variables are not covered by any atom"))

    ok, why = adp_tractable([_atom_vars(a) for a in rule.body], frozenset(rule.head_vars))
    if ok:
        v["ADP-SS"] = Verdict(PTIME, why) if sem is Semantics.SET else Verdict(UNKNOWN, f"set-semantics criterion holds ({why})")
    else:
        v["ADP-SS"] = Verdict(HARD, why)

    if head_clustering(q):
        v["SWP"] = Verdict(PTIME, "head clustering")
    else:
        bad = next(c for c in existential_graph(rule).components
                   if len({_atom_vars(rule.body[i]) & set(rule.head_vars) for i in c}) > 1)
        v["SWP"] = Verdict(HARD, f"component {bad} mixes head-variable sets")
    return report


def classify(instance) -> TractabilityReport:
    """Classify the query underlying a GDP instance (never inspects the data)."""
    q = instance.source_query
    if q is None:
        candidates = [s.query for s in instance.views() if not s.identity]
        if len({str(c) for c in candidates}) == 1:
            q = candidates[0]
    if q is None:
        report = TractabilityReport("<several queries>", instance.db.semantics.value)
        for name in VARIANTS:
            report.verdicts[name] = Verdict(UNKNOWN, "instance mixes several queries")
        report.variant = instance.variant
        return report
    report = classify_query(q, instance.db.semantics)
    report.variant = instance.variant
    return report
