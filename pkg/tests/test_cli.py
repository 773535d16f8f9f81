import json
import subprocess
import sys

import pytest

from delprop.cli import main
from delprop.queryir import format_query

from helpers import SWP_TOY, FIXTURES, STAR3


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _strip_timings(doc):
    doc = dict(doc)
    doc.pop("timings", None)
    return doc


def test_solve_swp_toy(capsys):
    code, out, _ = run(capsys, "solve", "--instance", str(SWP_TOY), "--mode", "smoothed")
    doc = json.loads(out)
    assert code == 0
    assert doc["objective"] == -1
    assert len(doc["gamma"]) == 1 and doc["gamma"][0][0] == "R"
    assert doc["verification"]["feasible"]
    assert set(doc) >= {"objective", "gamma", "verification", "stats", "timings"}


def test_solve_then_verify(capsys, tmp_path):
    out_path = tmp_path / "sol.json"
    code, out, _ = run(capsys, "solve", "--instance", str(SWP_TOY), "--out", str(out_path))
    assert code == 0
    code, out, _ = run(capsys, "verify", "--instance", str(SWP_TOY), "--gamma", str(out_path))
    doc = json.loads(out)
    assert code == 0 and doc["feasible"] and doc["objective"] == -1


def test_lp_naive(capsys):
    code, out, _ = run(capsys, "lp", "--instance", str(SWP_TOY), "--mode", "naive")
    doc = json.loads(out)
    assert code == 0
    assert doc["objective"] == pytest.approx(-1.5, abs=1e-6)
    assert doc["lp_integral"] is False


def test_relax_flag(capsys):
    _, out, _ = run(capsys, "solve", "--instance", str(SWP_TOY), "--mode", "naive", "--relax")
    doc = json.loads(out)
    assert doc["relaxed"] and doc["objective"] == pytest.approx(-1.5)
    assert doc["gamma"] is None  # the relaxed optimum is fractional


def test_analyze_query(capsys, tmp_path):
    qfile = tmp_path / "q.dl"
    qfile.write_text(format_query(STAR3))
    code, out, _ = run(capsys, "analyze", "--query", str(qfile))
    doc = json.loads(out)
    assert code == 0 and doc["verdicts"]["SWP"]["verdict"] == "PTIME"


def test_oracle_and_export(capsys, tmp_path):
    code, out, _ = run(capsys, "oracle", "--instance", str(SWP_TOY))
    assert code == 0 and json.loads(out)["optimum"] == -1
    lp = tmp_path / "m.lp"
    code, out, _ = run(capsys, "export-lp", "--instance", str(SWP_TOY), "--out", str(lp))
    assert code == 0 and lp.read_text() == (FIXTURES / "swp_toy" / "swp_toy_smoothed.lp").read_text()


def test_db_query_variant_route(capsys):
    db = FIXTURES / "swp_toy" / "db" / "manifest.json"
    q = FIXTURES / "swp_toy" / "qpres.dl"
    code, out, _ = run(capsys, "solve", "--db", str(db), "--query", str(q), "--variant", "dpss", "--target", "1")
    doc = json.loads(out)
    assert code == 0 and doc["objective"] == 1 and doc["gamma"] == [["S", 1]]
    code, out, _ = run(capsys, "solve", "--db", str(db), "--query", str(q), "--variant", "swp")
    assert json.loads(out)["objective"] == -1


def test_gen_and_bench(capsys, tmp_path):
    qfile = tmp_path / "q.dl"
    qfile.write_text(format_query(STAR3))
    code, out, _ = run(capsys, "gen", "--query", str(qfile), "--n", "30", "--max-domain", "10",
                       "--seed", "2", "--out", str(tmp_path / "db"))
    assert code == 0 and json.loads(out)["tuples"] == 30
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"variant": "swp", "query_file": "q.dl", "sizes": [30], "repetitions": 1,
                               "max_domain": 10}))
    code, out, _ = run(capsys, "bench", "--config", str(cfg), "--out", str(tmp_path / "r.csv"))
    doc = json.loads(out)
    assert code == 0 and doc["runs"] == 1 and doc["errors"] == 0


def test_infeasible_exit_code(capsys, tmp_path):
    (tmp_path / "q.dl").write_text("Qpres(x) :- R(x, y), S(x).")
    cfg = tmp_path / "inf.json"
    cfg.write_text(json.dumps({"database": str(FIXTURES / "swp_toy" / "db" / "manifest.json"),
                               "del": [{"query": "q.dl", "k": 1}], "pres": [{"query": "q.dl", "k": 1}]}))
    code, out, _ = run(capsys, "solve", "--instance", str(cfg))
    assert code == 1 and json.loads(out)["status"] == "INFEASIBLE"


def test_usage_errors(capsys):
    assert run(capsys, "solve")[0] == 2  # no instance
    assert run(capsys, "frobnicate")[0] == 2
    code, out, err = run(capsys, "solve", "--instance", "/nonexistent.json")
    assert code == 2 and out == "" and "error" in err


def test_deterministic_output(capsys):
    a = json.loads(run(capsys, "solve", "--instance", str(SWP_TOY))[1])
    b = json.loads(run(capsys, "solve", "--instance", str(SWP_TOY))[1])
    assert _strip_timings(a) == _strip_timings(b)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "delprop", "solve", "--instance", str(SWP_TOY)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["objective"] == -1
