"""Shared builders for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

from delprop.bench import GenProfile, gen_random, make_variant
from delprop.gdpmodel import InstanceError, load_instance, make_instance
from delprop.ilpbuild import IlpModel, LinearConstraint, Mode, VarId
from delprop.queryir import identity_queries, parse_query, star_query
from delprop.relcore import Semantics
from delprop.witness import evaluate

FIXTURES = Path(__file__).parent / "fixtures"
SWP_TOY = FIXTURES / "swp_toy" / "swp_toy.json"
FLIGHTS = FIXTURES / "flights" / "flights.json"

CHAIN2 = parse_query("Q(x) :- R(x, y), S(y, z).")
STAR3 = star_query(3)
STAR3_REPEATED = star_query(3, distinct=False)
TRIANGLE = parse_query("Q(x) :- R(x, y), S(y, z), T(z, x).")
TRIANGLE_BOOL = parse_query("Q() :- R(x, y), S(y, z), T(z, x).")
TRIANGLE_UNION = parse_query(
    "Q(x) :- R(x, a, b), R(x, b, c), R(x, c, a).\n"
    "Q(x) :- R(x, e, f), R(x, f, g).\n"
)

SMALL_QUERIES = {"chain2": CHAIN2, "star3": STAR3, "star3r": STAR3_REPEATED,
                 "triangle": TRIANGLE, "triangle_union": TRIANGLE_UNION}


def swp_toy():
    return load_instance(SWP_TOY)


def flights():
    return load_instance(FLIGHTS)


def small_instance(query, variant: str, semantics: str, seed: int, max_tuples: int = 10,
                   tries: int = 40):
    """A random instance with at most ``max_tuples`` distinct tuples.

    Seeds that give an empty view (or a false Boolean query) are skipped by
    drawing again from a derived stream; returns None when nothing works.
    """
    rng = random.Random(seed)
    n_rel = len(query.schema())
    for _ in range(tries):
        n = rng.randint(n_rel, max_tuples)
        domain = rng.randint(2, 3)
        profile = GenProfile(query, n, domain, Semantics(semantics), 3, rng.randrange(2 ** 31))
        try:
            db = gen_random(profile)
            return make_variant(variant, db, query, k_percent=rng.choice([10, 50, 100]))
        except ValueError:
            continue
    return None


GENERIC_QUERIES = [CHAIN2, parse_query("P(y) :- R(x, y)."), parse_query("U(x, z) :- R(x, y), S(y, z).")]


def generic_instance(seed: int, max_tuples: int = 7):
    """Random instance with views of every role over a chain database."""
    rng = random.Random(seed)
    sem = rng.choice([Semantics.SET, Semantics.BAG])
    db = gen_random(GenProfile(CHAIN2, rng.randint(2, max_tuples), 2, sem, 3, rng.randrange(2 ** 31)))
    views = {"del": [], "pres": [], "min": [], "max": []}
    for role in views:
        for _ in range(rng.randint(0, 1)):
            q = rng.choice(GENERIC_QUERIES)
            n = len(evaluate(db, q))
            if role == "del":
                if n:
                    views[role].append((q, rng.randint(1, n)))
            elif role == "pres":
                views[role].append((q, rng.randint(0, n)))
            else:
                views[role].append(q)
    if rng.random() < 0.5:
        views[rng.choice(["min", "max"])].extend(identity_queries(db))
    try:
        return make_instance(db, views["del"], views["pres"], views["min"], views["max"])
    except InstanceError:
        return None


def random_model(seed: int, max_vars: int = 20):
    """Random binary program with small integer data; about half the variables are tuple variables."""
    rng = random.Random(seed)
    n = rng.randint(1, max_vars)
    variables = [VarId("T", ("X", (i,))) if i % 2 == 0 else VarId("W", ("v", i)) for i in range(n)]
    objective = {v: rng.randint(-5, 5) for v in variables if rng.random() < 0.8}
    objective = {v: c for v, c in objective.items() if c}
    constraints = []
    for _ in range(rng.randint(0, 2 * n)):
        chosen = rng.sample(variables, rng.randint(1, min(n, 5)))
        terms = tuple((v, rng.choice([-3, -2, -1, 1, 1, 2, 3])) for v in chosen)
        sense = rng.choice(["<=", "<=", ">=", ">=", "="])
        lo = sum(min(c, 0) for _, c in terms)
        hi = sum(max(c, 0) for _, c in terms)
        constraints.append(LinearConstraint(terms, sense, rng.randint(lo, hi), "PC1"))
    return IlpModel(variables, objective, constraints, Mode.NAIVE)
