"""Generalized deletion propagation: compile view-side-effect problems to 0/1 ILPs and solve them."""

from .gdpmodel import GdpInstance, load_instance, make_instance, verify
from .ilpbuild import Mode, build
from .queryir import Query, parse_query
from .relcore import Database, Semantics, TupleRef, load_database, make_database
from .solve import solve_ilp, solve_lp
from .structure import classify, classify_query

__version__ = "0.1.0"

__all__ = [
    "Database", "GdpInstance", "Mode", "Query", "Semantics", "TupleRef", "build", "classify",
    "classify_query", "load_database", "load_instance", "make_database", "make_instance", "parse_query",
    "solve_ilp", "solve_lp", "verify",
]
