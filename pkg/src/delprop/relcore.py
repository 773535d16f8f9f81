"""Relational data model: relations with bag multiplicities, CSV ingestion,
tuple deletion.

Rows are stored deduplicated with a multiplicity counter. Under set semantics
every multiplicity is 1. Deleting a tuple always removes all of its copies.
"""

from __future__ import annotations

import csv
import json
import os
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Union

Constant = Union[int, str]

_INT_RE = re.compile(r"^[+-]?\d+$")


class IngestionError(ValueError):
    """Raised when a manifest or CSV file cannot be loaded."""


class Semantics(str, Enum):
    SET = "set"
    BAG = "bag"


def parse_constant(token: str) -> Constant:
    """Integer if the token is a decimal integer, else the stripped string."""
    token = token.strip()
    if _INT_RE.match(token):
        return int(token)
    return token


def const_key(c: Constant) -> tuple:
    # ints sort before strings; mixed comparisons never reach Python's <
    return (0, c) if isinstance(c, int) else (1, c)


def values_key(values: Iterable[Constant]) -> tuple:
    return tuple(const_key(c) for c in values)


def format_constant(c: Constant) -> str:
    return str(c) if isinstance(c, int) else repr(c)


class TupleRef(NamedTuple):
    relation: str
    values: tuple

    def sort_key(self) -> tuple:
        return (self.relation, values_key(self.values))

    def __str__(self) -> str:
        return f"{self.relation}({','.join(format_constant(c) for c in self.values)})"

    def to_json(self) -> dict:
        return {"relation": self.relation, "values": list(self.values)}

    @classmethod
    def from_json(cls, obj) -> "TupleRef":
        if isinstance(obj, dict):
            return cls(obj["relation"], tuple(obj["values"]))
        rel, *vals = obj
        return cls(rel, tuple(vals))


@dataclass(frozen=True)
class Relation:
    name: str
    arity: int
    rows: Mapping[tuple, int]

    def __post_init__(self):
        if self.arity < 0:
            raise ValueError(f"relation {self.name}: negative arity")
        rows = dict(self.rows)
        for key, m in rows.items():
            if len(key) != self.arity:
                raise ValueError(f"relation {self.name}: row {key} has length {len(key)}, expected {self.arity}")
            if not isinstance(m, int) or m < 1:
                raise ValueError(f"relation {self.name}: multiplicity of {key} must be a positive integer")
        object.__setattr__(self, "rows", MappingProxyType(rows))

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class Database:
    relations: Mapping[str, Relation]
    semantics: Semantics = Semantics.SET

    def __post_init__(self):
        rels = dict(self.relations)
        for name, rel in rels.items():
            if name != rel.name:
                raise ValueError(f"relation key {name!r} does not match relation name {rel.name!r}")
        sem = Semantics(self.semantics)
        if sem is Semantics.SET:
            for rel in rels.values():
                bad = [k for k, m in rel.rows.items() if m != 1]
                if bad:
                    raise ValueError(f"set semantics but {rel.name}{bad[0]} has multiplicity {rel.rows[bad[0]]}")
        object.__setattr__(self, "relations", MappingProxyType(rels))
        object.__setattr__(self, "semantics", sem)

    def __contains__(self, t: TupleRef) -> bool:
        rel = self.relations.get(t.relation)
        return rel is not None and tuple(t.values) in rel.rows

    def __len__(self) -> int:
        return sum(len(r) for r in self.relations.values())

    def tuples(self) -> list[TupleRef]:
        """All distinct tuples, sorted deterministically."""
        out = [TupleRef(r.name, k) for r in self.relations.values() for k in r.rows]
        out.sort(key=TupleRef.sort_key)
        return out

    def multiplicity(self, t: TupleRef) -> int:
        return tuple_weight(self, t)

    def total_weight(self) -> int:
        return sum(sum(r.rows.values()) for r in self.relations.values())


def make_database(
    data: Mapping[str, Iterable],
    semantics: Semantics | str = Semantics.SET,
    arities: Mapping[str, int] | None = None,
) -> Database:
    """Build a database from ``{name: rows}``.

    ``rows`` is either an iterable of tuples (repeats accumulate under BAG and
    collapse under SET) or a mapping ``row -> multiplicity``.
    """
    sem = Semantics(semantics)
    arities = dict(arities or {})
    rels = {}
    for name, rows in data.items():
        counts: dict[tuple, int] = {}
        items = rows.items() if isinstance(rows, Mapping) else ((r, 1) for r in rows)
        for row, m in items:
            row = tuple(row)
            counts[row] = counts.get(row, 0) + m
        if sem is Semantics.SET:
            counts = {k: 1 for k in counts}
        if name in arities:
            arity = arities[name]
        elif counts:
            arity = len(next(iter(counts)))
        else:
            raise ValueError(f"cannot infer arity of empty relation {name}")
        rels[name] = Relation(name, arity, counts)
    return Database(rels, sem)


def delete_tuples(db: Database, gamma: Iterable[TupleRef]) -> Database:
    """Return ``db`` with every tuple of ``gamma`` removed (all copies)."""
    doomed: dict[str, set] = {}
    for t in gamma:
        if t not in db:
            raise KeyError(f"tuple {t} is not in the database")
        doomed.setdefault(t.relation, set()).add(tuple(t.values))
    if not doomed:
        return db
    rels = dict(db.relations)
    for name, keys in doomed.items():
        old = rels[name]
        rels[name] = Relation(name, old.arity, {k: m for k, m in old.rows.items() if k not in keys})
    return Database(rels, db.semantics)


def tuple_weight(db: Database, t: TupleRef) -> int:
    rel = db.relations.get(t.relation)
    if rel is None or tuple(t.values) not in rel.rows:
        raise KeyError(f"tuple {t} is not in the database")
    return rel.rows[tuple(t.values)]


# ---------------------------------------------------------------------------
# flat-file ingestion


def _read_relation_csv(path: Path, name: str, arity: int, count_column: bool,
                       semantics: Semantics, header: bool) -> Relation:
    counts: dict[tuple, int] = {}
    width = arity + (1 if count_column else 0)
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != width:
                raise IngestionError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
            key = tuple(parse_constant(tok) for tok in row[:arity])
            m = 1
            if count_column:
                raw = row[arity].strip()
                if not _INT_RE.match(raw):
                    raise IngestionError(f"{path}:{lineno}: _count {raw!r} is not an integer")
                m = int(raw)
                if m < 1:
                    raise IngestionError(f"{path}:{lineno}: _count must be >= 1, got {m}")
                if semantics is Semantics.SET and m != 1:
                    raise IngestionError(f"{path}:{lineno}: _count {m} under set semantics")
            counts[key] = counts.get(key, 0) + m
    if semantics is Semantics.SET:
        counts = {k: 1 for k in counts}
    return Relation(name, arity, counts)


def load_database(manifest_path: str | os.PathLike, header: bool = False) -> Database:
    """Load a database from a JSON manifest and one CSV file per relation.

    Manifest layout::

        {"semantics": "set" | "bag",
         "relations": [{"name": "R", "arity": 2, "file": "R.csv",
                        "count_column": false}]}

    File paths are resolved relative to the manifest. ``header`` skips the
    first line of every CSV; a manifest-level ``"header": true`` does the same.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError(f"cannot read manifest {manifest_path}: {exc}") from exc
    try:
        semantics = Semantics(manifest.get("semantics", "set"))
    except ValueError as exc:
        raise IngestionError(f"{manifest_path}: unknown semantics {manifest.get('semantics')!r}") from exc
    header = header or bool(manifest.get("header", False))
    rels = {}
    for entry in manifest.get("relations", []):
        name, arity = entry["name"], int(entry["arity"])
        if name in rels:
            raise IngestionError(f"{manifest_path}: duplicate relation {name}")
        path = manifest_path.parent / entry["file"]
        if not path.exists():
            raise IngestionError(f"{manifest_path}: missing file {path}")
        rels[name] = _read_relation_csv(path, name, arity, bool(entry.get("count_column", False)),
                                        semantics, header)
    return Database(rels, semantics)


def write_database(db: Database, directory: str | os.PathLike, manifest_name: str = "manifest.json") -> Path:
    """Serialize ``db`` as a manifest plus CSV files; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    bag = db.semantics is Semantics.BAG
    entries = []
    for rel in db.relations.values():
        fname = f"{rel.name}.csv"
        with open(directory / fname, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            for key in sorted(rel.rows, key=values_key):
                writer.writerow([*key, rel.rows[key]] if bag else list(key))
        entry = {"name": rel.name, "arity": rel.arity, "file": fname}
        if bag:
            entry["count_column"] = True
        entries.append(entry)
    manifest = directory / manifest_name
    manifest.write_text(json.dumps({"semantics": db.semantics.value, "relations": entries}, indent=2) + "\n",
                        encoding="utf-8")
    return manifest
