import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delprop.gdpmodel import (InstanceError, load_instance, make_adpss, make_dpss, make_dpvs, make_instance,
                              make_resilience, make_swp, median_witness_target, verify)
from delprop.ilpbuild import build
from delprop.oracle import brute_force
from delprop.queryir import identity_queries, parse_query
from delprop.relcore import TupleRef, delete_tuples, make_database, tuple_weight
from delprop.solve import extract_interventions, solve_ilp
from delprop.witness import evaluate

from helpers import CHAIN2, SWP_TOY, FLIGHTS, STAR3, small_instance

SWP_TOY_DB = make_database({"R": [(1, 1), (1, 2)], "S": [(1,)]})
QPRES = parse_query("Qpres(x) :- R(x, y), S(x).")
SECTION2_DB = make_database({"R": [(1, 2), (2, 2)], "S": [(2, 3)]})


def subsets(db):
    tuples = db.tuples()
    for r in range(len(tuples) + 1):
        yield from (set(c) for c in itertools.combinations(tuples, r))


def direct_optimum(variant, db, q, target=None, k=None):
    """Optimum of the variant's own definition, by trying every deletion set."""
    base = evaluate(db, q)
    best = None
    for gamma in subsets(db):
        after = evaluate(delete_tuples(db, gamma), q)
        cost = sum(tuple_weight(db, t) for t in gamma)
        if variant in ("dpss", "res"):
            value = cost if (target not in after if variant == "dpss" else not after) else None
        elif variant == "dpvs":
            value = len(base - after) if target not in after else None
        elif variant == "adpss":
            value = cost if len(base) - len(after) >= k else None
        else:  # swp
            value = -cost if after == base else None
        if value is not None and (best is None or value < best):
            best = value
    return best


def test_dpss_shape():
    inst = make_dpss(SWP_TOY_DB, QPRES, (1,))
    assert len(inst.del_views) == 1 and inst.del_views[0].k == 1
    assert inst.del_views[0].query.is_boolean
    assert [s.query for s in inst.min_views] == identity_queries(SWP_TOY_DB)
    # deleting S(1) is the cheapest way to remove Qpres(1)
    assert brute_force(inst).optimum == 1


def test_resilience():
    inst = make_resilience(SECTION2_DB, parse_query("Q() :- R(x,y), S(y,z)."))
    assert brute_force(inst).optimum == 1
    with pytest.raises(InstanceError):
        make_resilience(make_database({"R": [(1, 2)], "S": [(5, 5)]}), parse_query("Q() :- R(x,y), S(y,z)."))
    with pytest.raises(InstanceError):
        make_resilience(SECTION2_DB, CHAIN2)
    single = make_database({"R": [(1, 2)], "S": [(2, 3)]})
    assert brute_force(make_resilience(single, parse_query("Q() :- R(x,y), S(y,z)."))).optimum == 1


def test_dpvs_head_dominated_side_effect_free():
    db = make_database({"R": [(1, 1), (1, 2), (2, 1)], "S": [(1, 5), (2, 5), (2, 6)], "T": [(1, 7), (2, 8)]})
    inst = make_dpvs(db, STAR3, (1,))
    assert brute_force(inst).optimum == 1
    one = make_database({"R": [(1, 2)], "S": [(2, 3)]})
    assert brute_force(make_dpvs(one, CHAIN2, (1,))).optimum == 1


def test_target_must_be_in_view():
    with pytest.raises(InstanceError):
        make_dpss(SWP_TOY_DB, QPRES, (2,))
    with pytest.raises(InstanceError):
        make_dpvs(SWP_TOY_DB, QPRES, (2,))


def test_adpss_bounds():
    db = make_database({"R": [(1, 2), (2, 2), (3, 4)], "S": [(2, 3), (4, 4)]})
    with pytest.raises(InstanceError):
        make_adpss(db, CHAIN2, 0)
    with pytest.raises(InstanceError):
        make_adpss(db, CHAIN2, 4)
    whole = make_adpss(db, CHAIN2, 3)
    assert brute_force(whole).optimum == direct_optimum("adpss", db, CHAIN2, k=3) == 2
    # a view tuple with a single one-tuple witness
    solo = make_database({"R": [(1,), (2,)]})
    assert brute_force(make_adpss(solo, parse_query("Q(x) :- R(x)."), 1)).optimum == 1


def test_swp_swp_toy_and_empty_view():
    assert brute_force(make_swp(SWP_TOY_DB, QPRES)).optimum == -1
    db = make_database({"R": {(1, 2): 1}, "S": {(9, 9): 1}})
    assert brute_force(make_swp(db, CHAIN2)).optimum == -2


def test_median_target():
    db = make_database({"R": [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2)], "S": [(1, 0), (2, 0)]})
    # witness counts per view tuple: Q(1)=1, Q(2)=2, Q(3)=2
    assert median_witness_target(db, CHAIN2) == (2,)


def test_k_validation():
    with pytest.raises(InstanceError):
        make_instance(SWP_TOY_DB, pres_views=[(QPRES, 2)])
    with pytest.raises(InstanceError):
        make_instance(SWP_TOY_DB, del_views=[(QPRES, 0)])
    assert make_instance(SWP_TOY_DB, pres_views=[(QPRES, 0)]).pres_views[0].k == 0


def test_empty_instance_objective_zero():
    inst = make_instance(SWP_TOY_DB)
    assert brute_force(inst).optimum == 0
    assert verify(inst, set(SWP_TOY_DB.tuples())).objective == 0


def test_load_swp_toy():
    inst = load_instance(SWP_TOY)
    assert inst.variant == "swp"
    assert [s.view_id for s in inst.views()] == ["pres0", "max0", "max1"]
    assert all(s.identity for s in inst.max_views)


def test_load_flights_with_percent():
    inst = load_instance(FLIGHTS)
    assert inst.del_views[0].k == 8  # ceil(50% of 15 two-stop routes)
    assert brute_force(inst).optimum == 3
    res = solve_ilp(build(inst))
    assert res.objective == 3
    assert verify(inst, extract_interventions(build(inst), res)).feasible


def test_load_errors(tmp_path):
    (tmp_path / "q.dl").write_text("Qpres(x) :- R(x, y), S(x).")
    db = SWP_TOY.parent / "db" / "manifest.json"
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"database": str(db), "pres": [{"query": "q.dl", "k": 5}]}))
    with pytest.raises(InstanceError):
        load_instance(cfg)
    cfg.write_text(json.dumps({"database": str(db), "del": [{"query": "q.dl"}]}))
    with pytest.raises(InstanceError, match="k"):
        load_instance(cfg)
    cfg.write_text(json.dumps({"pres": []}))
    with pytest.raises(InstanceError, match="database"):
        load_instance(cfg)


def test_verify_swp_toy():
    inst = load_instance(SWP_TOY)
    report = verify(inst, {TupleRef("R", (1, 1))})
    assert report.feasible and report.objective == -1
    assert report.deltas["pres0"] == 0
    bad = verify(inst, {TupleRef("S", (1,))})
    assert not bad.feasible and bad.violated_constraints[0].startswith("pres0")


def test_verify_unmet_deletion():
    report = verify(make_dpss(SWP_TOY_DB, QPRES, (1,)), set())
    assert not report.feasible
    assert report.violated_constraints == ["del0: deleted 0 < k=1"]


VARIANTS = ["dpss", "dpvs", "adpss", "swp"]


@given(st.sampled_from(VARIANTS), st.sampled_from(["set", "bag"]), st.integers(0, 10 ** 6))
@settings(max_examples=60, deadline=None)
def test_adapters_match_definitions(variant, semantics, seed):
    inst = small_instance(CHAIN2, variant, semantics, seed, max_tuples=8)
    if inst is None:
        return
    k = inst.del_views[0].k if variant == "adpss" else None
    expected = direct_optimum(variant, inst.db, CHAIN2, target=inst.target, k=k)
    assert brute_force(inst).optimum == expected


@given(st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_swp_feasible_sets_preserve_view(seed):
    inst = small_instance(CHAIN2, "swp", "set", seed, max_tuples=7)
    if inst is None:
        return
    base = evaluate(inst.db, CHAIN2)
    for gamma in subsets(inst.db):
        if verify(inst, gamma).feasible:
            assert evaluate(delete_tuples(inst.db, gamma), CHAIN2) == base
