"""Unions of conjunctive queries: AST, parser, printer, derived forms.

Grammar (one or more rules sharing a head name and arity)::

    Q(x, y) :- R(x, z), S(z, y, 3, 'abc').
    Q(x, y) :- T(x, y).

Bare identifiers in term position are variables; integers and single-quoted
strings are constants. ``#`` starts a line comment. Variables are scoped to
their rule.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .relcore import Constant, Database, format_constant


class QueryParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(f"{message}{where}")


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: Constant

    def __str__(self) -> str:
        return format_constant(self.value)


Term = Union[Var, Const]


@dataclass(frozen=True)
class Atom:
    relation: str
    terms: tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.terms)

    def variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for t in self.terms:
            if isinstance(t, Var):
                seen.setdefault(t.name)
        return list(seen)

    def __str__(self) -> str:
        return f"{self.relation}({', '.join(map(str, self.terms))})"


@dataclass(frozen=True)
class Rule:
    head_vars: tuple[str, ...]
    body: tuple[Atom, ...]

    def __post_init__(self):
        if not self.body:
            raise ValueError("rule body must be non-empty")
        body_vars = set(self.body_variables())
        for v in self.head_vars:
            if v not in body_vars:
                raise ValueError(f"unsafe rule: head variable {v} does not occur in the body")

    def body_variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for atom in self.body:
            for v in atom.variables():
                seen.setdefault(v)
        return list(seen)

    def variables(self) -> list[str]:
        """Head variables first, then existential variables by first occurrence."""
        head = list(self.head_vars)
        return head + [v for v in self.body_variables() if v not in set(head)]

    def existential_variables(self) -> list[str]:
        head = set(self.head_vars)
        return [v for v in self.body_variables() if v not in head]

    def relations(self) -> list[str]:
        return [a.relation for a in self.body]


@dataclass(frozen=True)
class Query:
    name: str
    head_arity: int
    rules: tuple[Rule, ...]
    full: bool = False

    def __post_init__(self):
        if not self.rules:
            raise ValueError("query needs at least one rule")
        for r in self.rules:
            if not self.full and len(r.head_vars) != self.head_arity:
                raise ValueError(f"rule head has {len(r.head_vars)} variables, query {self.name} has arity {self.head_arity}")

    @property
    def is_boolean(self) -> bool:
        return self.head_arity == 0

    def relations(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.rules:
            for a in r.body:
                seen.setdefault(a.relation)
        return list(seen)

    def schema(self) -> dict[str, int]:
        """Relation name -> arity as used by the atoms."""
        out: dict[str, int] = {}
        for r in self.rules:
            for a in r.body:
                if out.setdefault(a.relation, a.arity) != a.arity:
                    raise ValueError(f"relation {a.relation} used with arities {out[a.relation]} and {a.arity}")
        return out

    def is_self_join_free_cq(self) -> bool:
        if len(self.rules) != 1:
            return False
        rels = self.rules[0].relations()
        return len(rels) == len(set(rels))

    def __str__(self) -> str:
        return format_query(self)


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>:-)
  | (?P<int>[+-]?\d+)
  | (?P<str>'(?:[^'\\]|\\.)*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(),.])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QueryParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            yield kind, m.group(), line, pos - line_start + 1
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    yield "eof", "", line, pos - line_start + 1


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str, value: str | None = None):
        tok = self.tokens[self.i]
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of input"
            raise QueryParseError(f"expected {want!r}, found {got!r}", tok[2], tok[3])
        self.i += 1
        return tok

    def at(self, kind: str, value: str | None = None) -> bool:
        tok = self.tokens[self.i]
        return tok[0] == kind and (value is None or tok[1] == value)

    def term(self) -> Term:
        kind, text, line, col = self.peek()
        self.i += 1
        if kind == "ident":
            return Var(text)
        if kind == "int":
            return Const(int(text))
        if kind == "str":
            return Const(re.sub(r"\\(.)", r"\1", text[1:-1]))
        raise QueryParseError(f"expected a term, found {text or 'end of input'!r}", line, col)

    def term_list(self) -> list[Term]:
        self.take("punct", "(")
        terms: list[Term] = []
        if not self.at("punct", ")"):
            terms.append(self.term())
            while self.at("punct", ","):
                self.take("punct", ",")
                terms.append(self.term())
        self.take("punct", ")")
        return terms

    def rule(self):
        _, name, line, col = self.take("ident")
        head = self.term_list()
        head_vars = []
        for t in head:
            if not isinstance(t, Var):
                raise QueryParseError(f"head of {name} must list variables only, found {t}", line, col)
            if t.name in head_vars:
                raise QueryParseError(f"head variable {t.name} repeated in {name}", line, col)
            head_vars.append(t.name)
        self.take("arrow")
        body = []
        while True:
            _, rel, aline, acol = self.take("ident")
            body.append(Atom(rel, tuple(self.term_list())))
            if self.at("punct", ","):
                self.take("punct", ",")
                continue
            break
        self.take("punct", ".")
        body_vars = {v for a in body for v in a.variables()}
        for v in head_vars:
            if v not in body_vars:
                raise QueryParseError(f"unsafe rule: head variable {v} does not occur in the body", line, col)
        return name, Rule(tuple(head_vars), tuple(body)), line, col


def parse_query(text: str) -> Query:
    """Parse one query made of one or more rules with the same head."""
    p = _Parser(text)
    rules: list[Rule] = []
    name = None
    arity = None
    while not p.at("eof"):
        rname, rule, line, col = p.rule()
        if name is None:
            name, arity = rname, len(rule.head_vars)
        elif rname != name:
            raise QueryParseError(f"rule head {rname} differs from {name}", line, col)
        elif len(rule.head_vars) != arity:
            raise QueryParseError(f"inconsistent head arity for {name}: {len(rule.head_vars)} vs {arity}", line, col)
        rules.append(rule)
    if not rules:
        _, _, line, col = p.peek()
        raise QueryParseError("no rules found", line, col)
    q = Query(name, arity, tuple(rules))
    try:
        q.schema()
    except ValueError as exc:
        raise QueryParseError(str(exc)) from None
    return q


def format_query(q: Query) -> str:
    lines = []
    for r in q.rules:
        body = ", ".join(str(a) for a in r.body)
        lines.append(f"{q.name}({', '.join(r.head_vars)}) :- {body}.")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# derived forms


def full_query(q: Query) -> Query:
    """Promote every body variable to the head (no projection).

    Rules of a union may have different numbers of variables, so the result
    is flagged ``full`` and each rule carries its own head; ``head_arity`` is
    that of the first rule.
    """
    if q.full:
        return q
    rules = tuple(Rule(tuple(r.variables()), r.body) for r in q.rules)
    return Query(q.name, len(rules[0].head_vars), rules, full=True)


def existential_query(q: Query) -> Query:
    """The Boolean query with the same bodies and an empty head."""
    if q.is_boolean:
        return q
    return Query(q.name, 0, tuple(Rule((), r.body) for r in q.rules))


def _substitute(atom: Atom, binding: dict[str, Constant]) -> Atom:
    return Atom(atom.relation, tuple(Const(binding[t.name]) if isinstance(t, Var) and t.name in binding else t
                                     for t in atom.terms))


def bind_head(q: Query, constants: Sequence[Constant]) -> Query:
    """Replace head variables by ``constants`` in every body; result is Boolean."""
    constants = tuple(constants)
    if len(constants) != q.head_arity:
        raise ValueError(f"{q.name} has head arity {q.head_arity}, got {len(constants)} constants")
    if q.is_boolean:
        return q
    rules = []
    for r in q.rules:
        binding = dict(zip(r.head_vars, constants))
        rules.append(Rule((), tuple(_substitute(a, binding) for a in r.body)))
    return Query(q.name, 0, tuple(rules))


def identity_query(name: str, arity: int) -> Query:
    vars_ = tuple(f"x{i}" for i in range(1, arity + 1))
    return Query(f"Id{name}", arity, (Rule(vars_, (Atom(name, tuple(Var(v) for v in vars_)),)),))


def identity_queries(db: Database) -> list[Query]:
    """One ``IdR(x1..xk) :- R(x1..xk)`` per relation, in manifest order."""
    return [identity_query(rel.name, rel.arity) for rel in db.relations.values()]


def is_identity_query(q: Query) -> bool:
    if len(q.rules) != 1 or len(q.rules[0].body) != 1:
        return False
    r = q.rules[0]
    terms = r.body[0].terms
    return (all(isinstance(t, Var) for t in terms)
            and tuple(t.name for t in terms) == r.head_vars
            and len(set(r.head_vars)) == len(r.head_vars))


def star_query(k: int, distinct: bool = True, name: str = "Q") -> Query:
    """The k-star ``Q(a) :- R1(a,b1), ..., Rk(a,bk)``.

    With ``distinct=False`` and k=3 this is the spelling with a repeated
    relation, ``Q(a) :- R(a,b), S(a,c), R(a,d)``.
    """
    if distinct:
        rels = [f"R{i}" for i in range(1, k + 1)] if k != 3 else ["R", "S", "T"]
    else:
        if k != 3:
            raise ValueError("the repeated-relation spelling exists only for k=3")
        rels = ["R", "S", "R"]
    body = tuple(Atom(rel, (Var("a"), Var(f"b{i}"))) for i, rel in enumerate(rels, start=1))
    return Query(name, 1, (Rule(("a",), body),))


def parse_query_file(path) -> Query:
    with open(path, encoding="utf-8") as fh:
        return parse_query(fh.read())


def rename(q: Query, name: str) -> Query:
    return Query(name, q.head_arity, q.rules)


def atoms(q: Query) -> Iterable[Atom]:
    for r in q.rules:
        yield from r.body
