"""Command line interface.

Verbs:
  generate   sample an instance from the device catalog and write JSON
  solve      run one method on an instance, write outcome JSON / SVG
  validate   check an outcome against an instance, report tagged violations
  compare    run several methods on one instance, write a results table
  sweep      grid of (helper count, seed) runs, one CSV row per cell
  gantt      render an existing outcome as SVG

results.csv columns (solve, compare):
  instance, method, status, optimal, makespan_slots, makespan_ms,
  lower_bound, wall_clock_s, iterations; compare adds suboptimality_pct and
  speedup_x relative to the exact row when one is present

sweep csv columns:
  scenario, model, clients, helpers, slot_ms, seed, method, makespan_slots,
  makespan_ms, wall_clock_s

Config files (TOML or JSON) can preset solver and decomposition knobs; see
the [solver] and [admm] tables in the README.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .admm import AdmmConfig, solve_admm
from .gantt import render_gantt
from .heuristics import balanced_greedy, baseline_random_fcfs
from .model import (InfeasibleError, SchedulingError, instance_from_json,
                    instance_to_json, outcome_from_json, outcome_to_json)
from .scenarios import (ScenarioSpec, generate, heterogeneity,
                        load_catalog)
from .solver import SolverConfig, solve_exact
from .validate import validate, violations_to_jsonl

METHODS = ("exact", "admm", "greedy", "baseline")


def recommend_method(instance) -> str:
    """Greedy for big or near-homogeneous fleets, decomposition otherwise.

    The decomposition shines when timing spread makes assignment choices
    matter; with many clients or little spread, balanced load plus FCFS is
    already near the floor and orders of magnitude faster.
    """
    if len(instance.clients) >= 70 or heterogeneity(instance) < 0.15:
        return "greedy"
    return "admm"


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    text = Path(path).read_bytes()
    if path.endswith(".json"):
        return json.loads(text)
    try:
        import tomllib
    except ImportError:
        import tomli as tomllib
    return tomllib.loads(text.decode())


def _solver_config(cfg: dict, args) -> SolverConfig:
    sc = SolverConfig(**cfg.get("solver", {}))
    if getattr(args, "time_limit", None) is not None:
        sc.time_limit_s = args.time_limit
    return sc


def _run_method(instance, method: str, cfg: dict, args) -> "SolveOutcome":
    solver_cfg = _solver_config(cfg, args)
    if method == "auto":
        method = recommend_method(instance)
    if method == "exact":
        return solve_exact(instance, solver_cfg)
    if method == "admm":
        admm_cfg = AdmmConfig(solver=solver_cfg, **cfg.get("admm", {}))
        return solve_admm(instance, admm_cfg)
    if method == "greedy":
        return balanced_greedy(instance)
    if method == "baseline":
        return baseline_random_fcfs(instance, seed=getattr(args, "seed", 0) or 0)
    raise ValueError(f"unknown method {method!r}")


def _read_instance(path: str):
    return instance_from_json(Path(path).read_text())


def _outcome_row(instance, name: str, method: str, outcome) -> dict:
    return {
        "instance": name,
        "method": method,
        "status": outcome.stats.status,
        "optimal": outcome.stats.optimal,
        "makespan_slots": outcome.makespan,
        "makespan_ms": outcome.makespan * instance.slot_length_ms,
        "lower_bound": outcome.stats.lower_bound,
        "wall_clock_s": round(outcome.stats.wall_clock_s, 4),
        "iterations": outcome.stats.iterations,
    }


def _write_rows(path: str, rows: list[dict]):
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def _cmd_generate(args) -> int:
    spec = ScenarioSpec(scenario=args.scenario, n_clients=args.clients,
                        n_helpers=args.helpers, model=args.model,
                        seed=args.seed,
                        slot_length_ms=args.slot_ms,
                        time_scale=args.time_scale,
                        switching_cost=args.switching_cost)
    instance = generate(spec, load_catalog(args.catalog))
    text = instance_to_json(instance)
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output}: {len(instance.clients)} clients, "
              f"{len(instance.helpers)} helpers, horizon {instance.horizon}")
    else:
        print(text, end="")
    return 0


def _cmd_solve(args) -> int:
    instance = _read_instance(args.instance)
    cfg = _load_config(args.config)
    try:
        outcome = _run_method(instance, args.method, cfg, args)
    except (InfeasibleError, SchedulingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.output:
        Path(args.output).write_text(outcome_to_json(outcome))
    if args.gantt:
        Path(args.gantt).write_text(render_gantt(outcome, title=Path(args.instance).stem))
    row = _outcome_row(instance, Path(args.instance).name, outcome.stats.method, outcome)
    print(", ".join(f"{k}={v}" for k, v in row.items()))
    return 0


def _cmd_validate(args) -> int:
    instance = _read_instance(args.instance)
    outcome = outcome_from_json(Path(args.outcome).read_text())
    violations = validate(instance, outcome.assignment, outcome.schedule)
    if args.jsonl:
        Path(args.jsonl).write_text(violations_to_jsonl(violations))
    if violations:
        for v in violations:
            print(f"{v.tag}: {v.message}")
        print(f"{len(violations)} violation(s)")
        return 1
    print("ok")
    return 0


def _cmd_compare(args) -> int:
    instance = _read_instance(args.instance)
    cfg = _load_config(args.config)
    name = Path(args.instance).name
    rows = []
    for method in args.methods.split(","):
        method = method.strip()
        try:
            outcome = _run_method(instance, method, cfg, args)
        except (InfeasibleError, SchedulingError) as exc:
            print(f"{method}: {exc}", file=sys.stderr)
            rows.append({"instance": name, "method": method,
                         "status": "infeasible" if isinstance(exc, InfeasibleError)
                         else "error",
                         "optimal": False, "makespan_slots": "",
                         "makespan_ms": "", "lower_bound": "",
                         "wall_clock_s": "", "iterations": ""})
            continue
        rows.append(_outcome_row(instance, name, outcome.stats.method, outcome))
    exact = next((r for r in rows if r["method"] == "exact_ilp"
                  and r["makespan_slots"] != ""), None)
    for row in rows:
        solved = row["makespan_slots"] != ""
        if exact and solved:
            base = exact["makespan_slots"]
            row["suboptimality_pct"] = round(
                100.0 * (row["makespan_slots"] - base) / base, 2)
            row["speedup_x"] = (round(exact["wall_clock_s"] / row["wall_clock_s"], 2)
                                if row["wall_clock_s"] > 0 else "")
        else:
            row["suboptimality_pct"] = ""
            row["speedup_x"] = ""
    for row in rows:
        print(", ".join(f"{k}={v}" for k, v in row.items()))
    pick = recommend_method(instance)
    print(f"recommended: {pick} (clients={len(instance.clients)}, "
          f"heterogeneity={heterogeneity(instance):.3f})")
    if args.csv:
        _write_rows(args.csv, rows)
    return 0


def _sweep_cell(payload):
    spec_kwargs, method, seed = payload
    instance = generate(ScenarioSpec(**spec_kwargs))
    args = argparse.Namespace(time_limit=None, seed=seed)
    outcome = _run_method(instance, method, {}, args)
    return {
        "scenario": spec_kwargs["scenario"], "model": spec_kwargs["model"],
        "clients": spec_kwargs["n_clients"], "helpers": spec_kwargs["n_helpers"],
        "slot_ms": instance.slot_length_ms,
        "seed": seed, "method": outcome.stats.method,
        "makespan_slots": outcome.makespan,
        "makespan_ms": outcome.makespan * instance.slot_length_ms,
        "wall_clock_s": round(outcome.stats.wall_clock_s, 4),
    }


def _cmd_sweep(args) -> int:
    lo, _, hi = args.helpers.partition(":")
    helper_range = range(int(lo), int(hi or lo) + 1)
    slot_values = ([float(v) for v in args.slot_ms.split(",")]
                   if args.slot_ms else [None])
    cells = []
    for n_helpers in helper_range:
        for slot_ms in slot_values:
            for seed in range(args.seed, args.seed + args.seeds):
                cells.append((dict(scenario=args.scenario,
                                   n_clients=args.clients,
                                   n_helpers=n_helpers, model=args.model,
                                   seed=seed, slot_length_ms=slot_ms,
                                   time_scale=args.time_scale),
                              args.method, seed))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    for row in rows:
        print(", ".join(f"{k}={v}" for k, v in row.items()))
    if args.csv:
        _write_rows(args.csv, rows)
    return 0


def _cmd_gantt(args) -> int:
    outcome = outcome_from_json(Path(args.outcome).read_text())
    svg = render_gantt(outcome, title=Path(args.outcome).stem)
    Path(args.output).write_text(svg)
    print(f"wrote {args.output}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="splitsched",
        description="assignment and slot scheduling for parallel split learning")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample an instance")
    g.add_argument("--scenario", type=int, choices=(1, 2), required=True)
    g.add_argument("--clients", type=int, required=True)
    g.add_argument("--helpers", type=int, required=True)
    g.add_argument("--model", default="resnet101")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--slot-ms", type=float, default=None, dest="slot_ms")
    g.add_argument("--time-scale", type=float, default=1.0, dest="time_scale")
    g.add_argument("--switching-cost", type=int, default=0, dest="switching_cost")
    g.add_argument("--catalog", default=None)
    g.add_argument("-o", "--output", default=None)
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("solve", help="run one method")
    s.add_argument("instance")
    s.add_argument("--method", choices=METHODS + ("auto",), default="auto")
    s.add_argument("--config", default=None)
    s.add_argument("--time-limit", type=float, default=None, dest="time_limit")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", default=None)
    s.add_argument("--gantt", default=None)
    s.set_defaults(func=_cmd_solve)

    v = sub.add_parser("validate", help="check an outcome")
    v.add_argument("instance")
    v.add_argument("outcome")
    v.add_argument("--jsonl", default=None)
    v.set_defaults(func=_cmd_validate)

    c = sub.add_parser("compare", help="run several methods")
    c.add_argument("instance")
    c.add_argument("--methods", default="admm,greedy,baseline")
    c.add_argument("--config", default=None)
    c.add_argument("--time-limit", type=float, default=None, dest="time_limit")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--csv", default=None)
    c.set_defaults(func=_cmd_compare)

    w = sub.add_parser("sweep", help="helper-count x seed grid")
    w.add_argument("--scenario", type=int, choices=(1, 2), required=True)
    w.add_argument("--clients", type=int, required=True)
    w.add_argument("--helpers", required=True, help="N or LO:HI")
    w.add_argument("--model", default="resnet101")
    w.add_argument("--method", default="greedy")
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--seeds", type=int, default=1)
    w.add_argument("--slot-ms", default=None, dest="slot_ms",
                   help="slot length in ms, or a comma list to sweep")
    w.add_argument("--time-scale", type=float, default=1.0, dest="time_scale")
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--csv", default=None)
    w.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("gantt", help="render an outcome")
    p.add_argument("outcome")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_gantt)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
