"""Command line verbs, exercised through main() in temp directories."""

import csv
import json

import pytest

from splitsched.cli import main, recommend_method
from splitsched.model import instance_from_json, outcome_from_json
from splitsched.scenarios import ScenarioSpec, generate

# small catalog instance, coarse slots so the exact solver answers instantly
GEN = ["generate", "--scenario", "1", "--clients", "3", "--helpers", "2",
       "--seed", "0", "--slot-ms", "5000"]


@pytest.fixture
def inst_path(tmp_path):
    path = tmp_path / "inst.json"
    assert main(GEN + ["-o", str(path)]) == 0
    return path


def test_generate_writes_deterministic_instance(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(GEN + ["-o", str(a)]) == 0
    assert main(GEN + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert instance_from_json(a.read_text()).horizon == 16
    assert "3 clients, 2 helpers, horizon 16" in capsys.readouterr().out


def test_generate_to_stdout_parses(capsys):
    assert main(GEN) == 0
    inst = instance_from_json(capsys.readouterr().out)
    assert inst.clients == (1, 2, 3)


def test_solve_exact_outcome_and_validate(tmp_path, inst_path, capsys):
    out = tmp_path / "out.json"
    svg = tmp_path / "fig.svg"
    rc = main(["solve", str(inst_path), "--method", "exact",
               "-o", str(out), "--gantt", str(svg)])
    assert rc == 0
    outcome = outcome_from_json(out.read_text())
    assert outcome.stats.method == "exact_ilp"
    assert outcome.stats.optimal and outcome.makespan == 11
    assert svg.read_text().startswith("<svg")
    row = capsys.readouterr().out
    assert "method=exact_ilp" in row and "makespan_slots=11" in row
    assert main(["validate", str(inst_path), str(out)]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_solve_auto_resolves_to_recommendation(tmp_path, inst_path, capsys):
    # three heterogeneous clients: the decomposition is recommended
    inst = instance_from_json(inst_path.read_text())
    assert recommend_method(inst) == "admm"
    assert main(["solve", str(inst_path)]) == 0
    assert "method=admm_bwd" in capsys.readouterr().out


def test_solve_reruns_serialize_identically(tmp_path, inst_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["solve", str(inst_path), "--method", "exact",
                     "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_solve_infeasible_instance_fails_cleanly(tmp_path, inst_path, capsys):
    doc = json.loads(inst_path.read_text())
    doc["memory_demand"] = {k: 99.0 for k in doc["memory_demand"]}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["solve", str(bad), "--method", "greedy"]) == 1
    assert "error:" in capsys.readouterr().err


def test_compare_reports_gap_and_speedup(tmp_path, inst_path, capsys):
    table = tmp_path / "cmp.csv"
    rc = main(["compare", str(inst_path), "--methods",
               "exact,admm,greedy,baseline", "--csv", str(table)])
    assert rc == 0
    rows = {r["method"]: r for r in csv.DictReader(table.open())}
    assert list(csv.DictReader(table.open()).fieldnames) == [
        "instance", "method", "status", "optimal", "makespan_slots",
        "makespan_ms", "lower_bound", "wall_clock_s", "iterations",
        "suboptimality_pct", "speedup_x"]
    assert rows["exact_ilp"]["suboptimality_pct"] == "0.0"
    for r in rows.values():
        assert float(r["suboptimality_pct"]) >= 0.0
        if r["speedup_x"]:
            assert float(r["speedup_x"]) > 0.0
    assert "recommended: admm" in capsys.readouterr().out


def test_compare_continues_past_infeasible_methods(tmp_path, inst_path, capsys):
    doc = json.loads(inst_path.read_text())
    doc["memory_demand"] = {k: 99.0 for k in doc["memory_demand"]}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    table = tmp_path / "cmp.csv"
    rc = main(["compare", str(bad), "--methods", "exact,greedy",
               "--csv", str(table)])
    assert rc == 0
    rows = list(csv.DictReader(table.open()))
    assert [r["method"] for r in rows] == ["exact", "greedy"]
    for r in rows:
        assert r["status"] == "infeasible"
        assert r["makespan_slots"] == "" and r["suboptimality_pct"] == ""
    assert capsys.readouterr().err.count("\n") >= 2


def test_validate_flags_foreign_outcome(tmp_path, inst_path, capsys):
    out = tmp_path / "out.json"
    main(["solve", str(inst_path), "--method", "exact", "-o", str(out)])
    other = tmp_path / "other.json"
    main(["generate", "--scenario", "1", "--clients", "3", "--helpers", "2",
          "--seed", "7", "--slot-ms", "5000", "-o", str(other)])
    report = tmp_path / "viol.jsonl"
    rc = main(["validate", str(other), str(out), "--jsonl", str(report)])
    assert rc == 1
    lines = report.read_text().splitlines()
    assert len(lines) == 3
    assert {json.loads(ln)["tag"] for ln in lines} <= {f"eq{k}" for k in range(1, 8)}
    assert "violation" in capsys.readouterr().out


def test_sweep_covers_helper_slot_seed_grid(tmp_path, capsys):
    table = tmp_path / "sweep.csv"
    rc = main(["sweep", "--scenario", "1", "--clients", "3",
               "--helpers", "1:2", "--seeds", "2", "--slot-ms", "5000,2000",
               "--csv", str(table)])
    assert rc == 0
    rows = list(csv.DictReader(table.open()))
    assert len(rows) == 8
    assert list(rows[0]) == ["scenario", "model", "clients", "helpers",
                             "slot_ms", "seed", "method", "makespan_slots",
                             "makespan_ms", "wall_clock_s"]
    assert {r["helpers"] for r in rows} == {"1", "2"}
    assert {r["slot_ms"] for r in rows} == {"5000.0", "2000.0"}
    assert {r["seed"] for r in rows} == {"0", "1"}
    for r in rows:
        ms = float(r["makespan_slots"]) * float(r["slot_ms"])
        assert float(r["makespan_ms"]) == ms
    capsys.readouterr()


def test_gantt_verb_renders_saved_outcome(tmp_path, inst_path, capsys):
    out = tmp_path / "out.json"
    main(["solve", str(inst_path), "--method", "greedy", "-o", str(out)])
    fig = tmp_path / "fig.svg"
    assert main(["gantt", str(out), "-o", str(fig)]) == 0
    assert fig.read_text().startswith("<svg")
    assert f"wrote {fig}" in capsys.readouterr().out


def test_config_toml_matches_json(tmp_path, inst_path):
    toml_cfg = tmp_path / "cfg.toml"
    toml_cfg.write_text('[solver]\nbackend = "milp"\n\n[admm]\nmax_iterations = 2\n')
    json_cfg = tmp_path / "cfg.json"
    json_cfg.write_text(json.dumps(
        {"solver": {"backend": "milp"}, "admm": {"max_iterations": 2}}))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for cfg, path in ((toml_cfg, a), (json_cfg, b)):
        assert main(["solve", str(inst_path), "--method", "admm",
                     "--config", str(cfg), "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    extra = json.loads(a.read_text())["stats"]["extra"]
    assert extra["admm_iterations"] == 2


def test_recommendation_prefers_greedy_on_big_fleets():
    inst = generate(ScenarioSpec(1, 70, 3, seed=0))
    assert recommend_method(inst) == "greedy"
