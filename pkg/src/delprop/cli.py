"""Command line entry point: ``delprop <subcommand> ...``.

Every subcommand prints one JSON document on stdout; diagnostics go to stderr.
Exit codes: 0 success, 1 infeasible, 2 usage or input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import bench
from .gdpmodel import (GdpInstance, InstanceError, load_instance, make_adpss, make_dpss, make_dpvs,
                       make_resilience, make_swp, median_witness_target, verify)
from .ilpbuild import Mode, build, lp_relaxation, model_stats
from .oracle import OracleCapError, brute_force
from .queryir import QueryParseError, parse_query_file
from .relcore import IngestionError, Semantics, TupleRef, load_database, parse_constant, write_database
from .solve import (BUDGET, OPTIMAL, ExternalSolverError, SolverConfig, export_lp_file, extract_interventions,
                    integrality_report, solve_external, solve_ilp, solve_lp)
from .structure import classify, classify_query

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _emit(obj, out: str | None = None) -> None:
    text = json.dumps(obj, indent=2, default=str)
    print(text)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _gamma_json(gamma) -> list:
    return [[t.relation, *t.values] for t in sorted(gamma, key=TupleRef.sort_key)]


def _parse_target(text: str | None) -> tuple | None:
    if text is None:
        return None
    text = text.strip()
    if text in ("", "()"):
        return ()
    return tuple(parse_constant(tok) for tok in text.strip("()").split(","))


def _instance(args) -> GdpInstance:
    if args.instance:
        return load_instance(args.instance)
    if not (args.db and args.query):
        raise UsageError("give --instance, or --db and --query with --variant")
    db = load_database(args.db, header=args.header)
    q = parse_query_file(args.query)
    variant = args.variant
    target = _parse_target(args.target)
    if variant in ("dpss", "dpvs"):
        target = median_witness_target(db, q) if target is None else target
        return (make_dpss if variant == "dpss" else make_dpvs)(db, q, target)
    if variant == "adpss":
        if args.k is None:
            return bench.make_variant("adpss", db, q)
        return make_adpss(db, q, args.k)
    if variant == "swp":
        return make_swp(db, q)
    if variant == "res":
        return make_resilience(db, q)
    raise UsageError("--variant generic needs --instance")


def _config(args) -> SolverConfig:
    kw = {}
    if args.feas_tol is not None:
        kw["feas_tol"] = args.feas_tol
    if args.int_tol is not None:
        kw["int_tol"] = args.int_tol
    if args.engine:
        kw["engine"] = args.engine
    if args.max_nodes is not None:
        kw["max_nodes"] = args.max_nodes
    if args.time_limit is not None:
        kw["time_limit"] = args.time_limit
    return SolverConfig(**kw)


def _build(args, inst):
    return build(inst, Mode(args.mode), collapse_identity=not args.no_collapse)


def cmd_solve(args) -> int:
    timings = {}
    t0 = time.perf_counter()
    inst = _instance(args)
    for spec in inst.views():
        inst.provenance(spec)
    timings["enumerate_ms"] = (time.perf_counter() - t0) * 1000
    if args.dump_provenance:
        dump = {spec.view_id: inst.provenance(spec).to_json() for spec in inst.views()}
        Path(args.dump_provenance).write_text(json.dumps(dump, indent=2, default=str) + "\n", encoding="utf-8")
    t0 = time.perf_counter()
    model = _build(args, inst)
    timings["build_ms"] = (time.perf_counter() - t0) * 1000
    if args.relax:
        model = lp_relaxation(model)
    config = _config(args)
    t0 = time.perf_counter()
    if args.solver == "external":
        sol = solve_external(model, args.solver_cmd)
        status, objective, node_count, best_bound = sol.status, sol.objective, None, None
    elif args.relax:
        sol = solve_lp(model, config)
        status, objective, node_count, best_bound = sol.status, sol.objective, None, sol.objective
    else:
        sol = solve_ilp(model, config)
        status, objective, node_count, best_bound = sol.status, sol.objective, sol.node_count, sol.best_bound
    timings["solve_ms"] = (time.perf_counter() - t0) * 1000
    result = {"status": status, "mode": model.mode.value, "relaxed": not model.integral,
              "objective": objective, "best_bound": best_bound, "node_count": node_count,
              "gamma": None, "verification": None, "stats": model_stats(model),
              "timings": {k: round(v, 3) for k, v in timings.items()}}
    if status == OPTIMAL or (status == BUDGET and objective is not None):
        try:
            gamma = extract_interventions(model, sol)
        except ValueError as exc:
            print(f"note: {exc}", file=sys.stderr)
        else:
            result["gamma"] = _gamma_json(gamma)
            result["verification"] = verify(inst, gamma).to_json()
    _emit(result, args.out)
    if status == "INFEASIBLE":
        return EXIT_INFEASIBLE
    if status != OPTIMAL:
        print(f"solver finished with status {status}", file=sys.stderr)
        return EXIT_OK if status == BUDGET else EXIT_INTERNAL
    return EXIT_OK


def cmd_lp(args) -> int:
    inst = _instance(args)
    model = _build(args, inst)
    report = integrality_report(model, _config(args))
    report = {"objective": report["lp_objective"], "mode": model.mode.value, **report}
    _emit(report, args.out)
    return EXIT_INFEASIBLE if report["lp_status"] == "INFEASIBLE" else EXIT_OK


def cmd_analyze(args) -> int:
    if args.instance or args.db:
        report = classify(_instance(args))
    elif args.query:
        report = classify_query(parse_query_file(args.query), Semantics(args.semantics))
    else:
        raise UsageError("analyze needs --query, or an instance")
    _emit(report.to_json(), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _instance(args)
    res = brute_force(inst, cap=args.cap)
    out = {"optimum": res.optimum, "explored": res.explored,
           "gamma": _gamma_json(res.witness_gamma) if res.witness_gamma is not None else None}
    _emit(out, args.out)
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_gen(args) -> int:
    if not args.query:
        raise UsageError("gen needs --query")
    profile = bench.GenProfile(parse_query_file(args.query), args.n, args.max_domain,
                               Semantics(args.semantics), args.max_bag, args.seed)
    db = bench.gen_random(profile)
    out = {"tuples": len(db), "semantics": db.semantics.value,
           "relations": {name: len(rel) for name, rel in db.relations.items()}}
    if args.out:
        out["manifest"] = str(write_database(db, args.out))
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_bench(args) -> int:
    if not args.config:
        raise UsageError("bench needs --config")
    config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    base = Path(args.config).parent
    if "query_file" in config:
        config["query"] = (base / config["query_file"]).read_text(encoding="utf-8")
    if args.seed is not None:
        config["seed"] = args.seed
    if args.time_limit is not None:
        config["time_limit"] = args.time_limit
    if args.max_nodes is not None:
        config["max_nodes"] = args.max_nodes
    out = args.out or config.get("out") or "bench_results.csv"
    records = bench.run_experiment(config, out_csv=out)
    summary = bench.summarize(records)
    print(json.dumps({"runs": len(records), "errors": sum(1 for r in records if r.error),
                      "csv": str(out), "summary": summary}, indent=2, default=str))
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _instance(args)
    if not args.gamma:
        raise UsageError("verify needs --gamma (a JSON list of tuples or a solve output)")
    data = json.loads(Path(args.gamma).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data.get("gamma") or []
    gamma = {TupleRef.from_json(item) for item in data}
    report = verify(inst, gamma)
    _emit(report.to_json(), args.out)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_export_lp(args) -> int:
    if not args.out:
        raise UsageError("export-lp needs --out")
    inst = _instance(args)
    model = _build(args, inst)
    if args.relax:
        model = lp_relaxation(model)
    export_lp_file(model, args.out)
    print(json.dumps({"written": args.out, "stats": model_stats(model)}, indent=2))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve, "lp": cmd_lp, "analyze": cmd_analyze, "oracle": cmd_oracle, "gen": cmd_gen,
    "bench": cmd_bench, "verify": cmd_verify, "export-lp": cmd_export_lp,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", help="instance config JSON")
    common.add_argument("--db", help="database manifest JSON")
    common.add_argument("--header", action="store_true", help="CSV files have a header row")
    common.add_argument("--query", help="query file")
    common.add_argument("--variant", choices=["dpss", "dpvs", "adpss", "swp", "res", "generic"], default="generic")
    common.add_argument("--target", help="view tuple for dpss/dpvs, e.g. 1,2 (default: median-witness tuple)")
    common.add_argument("--k", type=int, help="k for adpss (default: 10%% of the view)")
    common.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.SMOOTHED.value)
    common.add_argument("--no-collapse", action="store_true", help="keep identity views as view variables")
    common.add_argument("--relax", action="store_true", help="solve the LP relaxation only")
    common.add_argument("--solver", choices=["embedded", "external"], default="embedded")
    common.add_argument("--solver-cmd", help="external solver command (default: $GDP_SOLVER_CMD)")
    common.add_argument("--engine", choices=["highs", "simplex"], help="LP engine for the embedded solver")
    common.add_argument("--feas-tol", type=float)
    common.add_argument("--int-tol", type=float)
    common.add_argument("--max-nodes", type=int)
    common.add_argument("--time-limit", type=float, help="branch-and-bound time limit in seconds")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output path (JSON copy, LP file, CSV or database directory)")

    parser = argparse.ArgumentParser(prog="delprop", description="Generalized deletion propagation via ILP.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve an instance exactly (or its relaxation)").add_argument(
        "--dump-provenance", help="write witness lists of every view as JSON")
    sub.add_parser("lp", parents=[common], help="LP relaxation and integrality report")
    p = sub.add_parser("analyze", parents=[common], help="structural tractability report")
    p.add_argument("--semantics", choices=["set", "bag"], default="set")
    p = sub.add_parser("oracle", parents=[common], help="brute-force optimum")
    p.add_argument("--cap", type=int, default=20)
    p = sub.add_parser("gen", parents=[common], help="generate a random database for a query")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--max-domain", type=int, default=1000)
    p.add_argument("--semantics", choices=["set", "bag"], default="set")
    p.add_argument("--max-bag", type=int, default=10)
    p = sub.add_parser("bench", parents=[common], help="run an experiment config")
    p.add_argument("--config")
    p = sub.add_parser("verify", parents=[common], help="check an intervention set")
    p.add_argument("--gamma")
    sub.add_parser("export-lp", parents=[common], help="write the model as an LP file")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "seed", None) is None and args.command == "gen":
        args.seed = 0
    try:
        return COMMANDS[args.command](args)
    except (UsageError, IngestionError, QueryParseError, InstanceError, OracleCapError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExternalSolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
