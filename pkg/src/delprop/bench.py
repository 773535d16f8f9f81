"""Synthetic instance generation and the experiment runner.

Relations are filled by sampling distinct tuples uniformly from
``[1..max_domain]^arity``; the tuple budget is split evenly over the relations
of the query. Under bag semantics each tuple gets a multiplicity drawn
uniformly from ``[1..max_bag]``.
"""

from __future__ import annotations

import csv
import json
import math
import random
import statistics
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable

from .gdpmodel import (GdpInstance, make_adpss, make_dpss, make_dpvs, make_resilience, make_swp,
                       median_witness_target, verify)
from .ilpbuild import Mode, build, lp_relaxation, model_stats
from .queryir import Query, parse_query
from .relcore import Database, Semantics, make_database
from .solve import BUDGET, OPTIMAL, SolverConfig, extract_interventions, solve_ilp, solve_lp
from .witness import evaluate

VARIANTS = ("dpss", "dpvs", "adpss", "swp", "res")


@dataclass(frozen=True)
class GenProfile:
    query: Query
    n_tuples: int
    max_domain: int = 1000
    semantics: Semantics = Semantics.SET
    max_bag: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_tuples < 0 or self.max_domain < 1 or self.max_bag < 1:
            raise ValueError("n_tuples >= 0, max_domain >= 1 and max_bag >= 1 are required")


def _decode(index: int, arity: int, base: int) -> tuple:
    out = []
    for _ in range(arity):
        index, r = divmod(index, base)
        out.append(r + 1)
    return tuple(reversed(out))


def gen_random(profile: GenProfile) -> Database:
    schema = profile.query.schema()
    names = list(schema)
    rng = random.Random(profile.seed)
    sem = Semantics(profile.semantics)
    share, extra = divmod(profile.n_tuples, len(names))
    data = {}
    for i, name in enumerate(names):
        arity = schema[name]
        want = share + (1 if i < extra else 0)
        cap = profile.max_domain ** arity
        if want > cap:
            raise ValueError(f"relation {name} needs {want} tuples but only {cap} exist over domain {profile.max_domain}")
        rows = [_decode(ix, arity, profile.max_domain) for ix in rng.sample(range(cap), want)]
        if sem is Semantics.BAG:
            data[name] = {r: rng.randint(1, profile.max_bag) for r in rows}
        else:
            data[name] = rows
    return make_database(data, sem, arities=schema)


def make_variant(variant: str, db: Database, q: Query, k: int | None = None,
                 k_percent: float = 10.0) -> GdpInstance:
    """Reduce one classical variant on ``(db, q)`` to a GDP instance.

    DP-SS/DP-VS targets the view tuple with the median witness count; ADP-SS
    uses ``k = ceil(k_percent% of |view|)`` unless ``k`` is given.
    """
    variant = variant.lower()
    if variant == "dpss":
        return make_dpss(db, q, median_witness_target(db, q))
    if variant == "dpvs":
        return make_dpvs(db, q, median_witness_target(db, q))
    if variant == "adpss":
        n = len(evaluate(db, q))
        if k is None:
            k = max(1, math.ceil(k_percent * n / 100.0 - 1e-9))
        return make_adpss(db, q, k)
    if variant == "swp":
        return make_swp(db, q)
    if variant == "res":
        return make_resilience(db, q)
    raise ValueError(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")


@dataclass
class RunRecord:
    instance_id: str
    variant: str
    query: str
    semantics: str
    mode: str
    n_tuples: int
    max_domain: int
    seed: int
    rep: int
    n_witnesses: int = 0
    n_constraints: int = 0
    lp_objective: float | None = None
    ilp_objective: float | None = None
    gap: float | None = None
    lp_integral: bool | None = None
    node_count: int | None = None
    status: str = ""
    verified: bool | None = None
    t_enumerate_ms: float = 0.0
    t_build_ms: float = 0.0
    t_lp_ms: float = 0.0
    t_ilp_ms: float = 0.0
    error: str = ""


COLUMNS = [f.name for f in fields(RunRecord)]


def _ms(t0: float) -> float:
    return round((time.perf_counter() - t0) * 1000.0, 3)


def run_cell(variant: str, query_text: str, mode: str, n_tuples: int, max_domain: int,
             semantics: str, max_bag: int, seed: int, rep: int,
             solver: SolverConfig | None = None, k_percent: float = 10.0) -> RunRecord:
    """Generate, compile and solve one instance; failures land in ``error``."""
    solver = solver or SolverConfig()
    q = parse_query(query_text)
    rec = RunRecord(f"{variant}-{n_tuples}-{max_domain}-{seed}-{rep}", variant, query_text.strip(),
                    semantics, mode, n_tuples, max_domain, seed, rep)
    try:
        db = gen_random(GenProfile(q, n_tuples, max_domain, Semantics(semantics), max_bag, seed))
        t0 = time.perf_counter()
        inst = make_variant(variant, db, q, k_percent=k_percent)
        for spec in inst.views():
            inst.provenance(spec)
        rec.t_enumerate_ms = _ms(t0)
        rec.n_witnesses = sum(len(inst.provenance(s).witnesses) for s in inst.views() if not s.identity)
        t0 = time.perf_counter()
        model = build(inst, Mode(mode))
        rec.t_build_ms = _ms(t0)
        rec.n_constraints = model_stats(model)["constraints"]
        t0 = time.perf_counter()
        lp = solve_lp(lp_relaxation(model), solver)
        rec.t_lp_ms = _ms(t0)
        t0 = time.perf_counter()
        mip = solve_ilp(model, solver)
        rec.t_ilp_ms = _ms(t0)
        rec.status = mip.status
        rec.node_count = mip.node_count
        if lp.status == OPTIMAL:
            rec.lp_objective = lp.objective
            rec.lp_integral = max((abs(x - round(x)) for x in lp.assignment.values()), default=0.0) < solver.int_tol
        if mip.status == OPTIMAL:
            rec.ilp_objective = mip.objective
            if lp.status == OPTIMAL:
                gap = mip.objective - lp.objective
                rec.gap = 0 if abs(gap) <= solver.int_tol else gap
            report = verify(inst, extract_interventions(model, mip))
            rec.verified = report.feasible and report.objective == mip.objective
    except Exception as exc:  # recorded per run; the sweep continues
        rec.error = f"{type(exc).__name__}: {exc}"
        if not isinstance(exc, ValueError):
            rec.error += " | " + traceback.format_exc(limit=2).replace("\n", " ")
    return rec


def _cell_seed(seed: int, sweep_i: int, size: int, rep: int) -> int:
    return (seed * 1_000_003 + sweep_i * 100_003 + size * 1_009 + rep * 7) % (2 ** 31)


def _sizes(config: dict) -> list[int]:
    if "sizes" in config:
        return [int(s) for s in config["sizes"]]
    n0, steps = int(config.get("n0", 100)), int(config.get("steps", 4))
    return [n0 * 2 ** i for i in range(steps)]


def _cells(config: dict) -> Iterable[dict]:
    variants = config.get("variants") or [config.get("variant", "swp")]
    queries = config.get("queries") or [config["query"]]
    modes = config.get("modes", ["smoothed"])
    domains = config.get("max_domains") or [config.get("max_domain", 1000)]
    reps = int(config.get("repetitions", 3))
    seed = int(config.get("seed", 0))
    solver = SolverConfig(time_limit=config.get("time_limit"), max_nodes=int(config.get("max_nodes", 200_000)))
    for sweep_i, (qtext, dom) in enumerate((q, d) for q in queries for d in domains):
        for size in _sizes(config):
            for rep in range(reps):
                cell_seed = _cell_seed(seed, sweep_i, size, rep)
                for variant in variants:
                    for mode in modes:
                        yield dict(variant=variant, query_text=qtext, mode=mode, n_tuples=size,
                                   max_domain=int(dom), semantics=config.get("semantics", "set"),
                                   max_bag=int(config.get("max_bag", 10)), seed=cell_seed, rep=rep,
                                   solver=solver, k_percent=float(config.get("k_percent", 10.0)))


def _run_kwargs(kw: dict) -> RunRecord:
    return run_cell(**kw)


def summarize(records: list[RunRecord]) -> list[dict]:
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.variant, r.query, r.semantics, r.mode, r.max_domain, r.n_tuples), []).append(r)
    out = []
    for (variant, query, sem, mode, dom, n), rs in groups.items():
        ok = [r for r in rs if not r.error and r.status == OPTIMAL]
        # budgeted runs keep their (lower-bound) solve time
        timed = [r for r in rs if not r.error and r.status in (OPTIMAL, BUDGET)]

        def med(attr, runs=ok):
            vals = [getattr(r, attr) for r in runs if getattr(r, attr) is not None]
            return statistics.median(vals) if vals else None
        gaps = [r.gap for r in ok if r.gap is not None]
        out.append({
            "variant": variant, "query": query, "semantics": sem, "mode": mode, "max_domain": dom,
            "n_tuples": n, "runs": len(rs), "ok": len(ok), "budget_hits": sum(1 for r in timed if r.status == BUDGET),
            "errors": sum(1 for r in rs if r.error), "median_ilp_ms": med("t_ilp_ms", timed), "median_lp_ms": med("t_lp_ms"),
            "median_build_ms": med("t_build_ms"), "median_enumerate_ms": med("t_enumerate_ms"),
            "median_witnesses": med("n_witnesses"), "median_nodes": med("node_count"),
            "root_node_fraction": (sum(1 for r in ok if r.node_count == 1) / len(ok)) if ok else None,
            "max_gap": max(gaps) if gaps else None,
            "all_verified": all(r.verified for r in ok) if ok else None,
        })
    return out


def run_experiment(config: dict, out_csv: str | Path | None = None,
                   summary_json: str | Path | None = None) -> list[RunRecord]:
    """Run every cell of ``config``; write one CSV row per run and a JSON summary.

    Config keys: ``variant``/``variants``, ``query``/``queries`` (rule text),
    ``modes``, ``sizes`` or ``n0``+``steps``, ``repetitions``, ``seed``,
    ``semantics``, ``max_domain``/``max_domains`` (sweep), ``max_bag``,
    ``k_percent``, ``time_limit`` and ``max_nodes`` (per-run branch-and-bound
    budget), ``workers``.
    """
    cells = list(_cells(config))
    workers = int(config.get("workers", 1))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_kwargs, cells))
    else:
        records = [run_cell(**kw) for kw in cells]
    out_csv = out_csv or config.get("out")
    if out_csv:
        out_csv = Path(out_csv)
        out_csv.parent.mkdir(parents=True, exist_ok=True)
        with open(out_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=COLUMNS)
            writer.writeheader()
            for r in records:
                writer.writerow(asdict(r))
        summary_json = summary_json or out_csv.with_suffix(".summary.json")
    if summary_json:
        Path(summary_json).write_text(json.dumps(summarize(records), indent=2) + "\n", encoding="utf-8")
    return records
