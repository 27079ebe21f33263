"""Command line entry point: ``asymabs <command> ...`` or ``python -m asymabs``."""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from asymabs.engine import ltd2
from asymabs.harness import (MatchRecord, TournamentConfig, decision_latencies, format_replay, generate_scenario,
                             make_agent, overall_rate, parse_scenario, replay, results_csv, run_match, run_tournament,
                             second_step_share)
from asymabs.oracle import ExplosionError, OracleError, theorem1_check, tiny_instance
from asymabs.scripts import DEFAULT_PORTFOLIO, Portfolio
from asymabs.search import SearchBudget, evaluate


def _budget(args, parser: configparser.ConfigParser | None) -> SearchBudget:
    if args.budget_nodes is not None:
        return SearchBudget.nodes(args.budget_nodes)
    if args.budget_ms is not None:
        return SearchBudget.wallclock(args.budget_ms)
    if parser is not None and parser.has_section("budget"):
        b = parser["budget"]
        if b.get("mode", "wallclock") == "nodes":
            return SearchBudget.nodes(b.getint("nodes", 2000))
        return SearchBudget.wallclock(b.getfloat("ms", 40.0))
    return SearchBudget.wallclock(40.0)


def _read_config(path) -> configparser.ConfigParser | None:
    if not path:
        return None
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    return parser


def _agent_options(parser) -> dict:
    if parser is not None and parser.has_section("agents"):
        return {k: v for k, v in parser["agents"].items() if k != "pairings"}
    return {}


def _warm(agents, state, budget):
    # first calls compile the kernels; keep that out of the timed match
    for ag in agents:
        ag.decide(state, 0, SearchBudget.nodes(20) if budget.mode == "wallclock" else budget)


def cmd_run_match(args) -> int:
    parser = _read_config(args.config)
    budget = _budget(args, parser)
    names = [a.strip() for a in args.agents.split(",")]
    if len(names) != 2:
        raise SystemExit("--agents needs exactly two comma-separated names")
    opts = _agent_options(parser)
    agents = [make_agent(n, opts) for n in names]
    scen = parse_scenario(args.scenario, seed=args.seed, frame_cap=args.frame_cap)
    state = generate_scenario(scen)
    _warm(agents, state, budget)
    rec = run_match(agents[0], agents[1], state, budget, seed=args.seed, snapshots=args.replay is not None,
                    timing=budget.mode == "wallclock", scenario_name=scen.name)
    if args.replay:
        Path(args.replay).write_text(rec.to_ndjson())
    lat = [e[k]["elapsed_ms"] for e in rec.log for k in ("p0", "p1") if k in e and "elapsed_ms" in e[k]]
    summary = {"scenario": scen.name, "agents": names, "seed": args.seed, "outcome": rec.outcome,
               "final_ltd2": round(rec.final_ltd2, 6), "final_frame": rec.final_frame,
               "decisions": len(rec.log), "forfeit": rec.forfeit}
    if lat:
        summary["max_latency_ms"] = round(max(lat), 3)
    print(json.dumps(summary))
    return 0


def cmd_run_tournament(args) -> int:
    overrides = {"seed": args.seed, "workers": args.workers, "matches": args.matches}
    if args.budget_nodes is not None:
        overrides["budget"] = SearchBudget.nodes(args.budget_nodes)
    elif args.budget_ms is not None:
        overrides["budget"] = SearchBudget.wallclock(args.budget_ms)
    if args.scenarios:
        overrides["scenarios"] = tuple(s.strip() for s in args.scenarios.split(","))
    if args.pairings:
        overrides["pairings"] = tuple(tuple(p.split("-", 1)) for p in args.pairings.split(","))
    cfg = TournamentConfig.from_file(args.config, **overrides) if args.config else TournamentConfig(
        **{k: v for k, v in overrides.items() if v is not None})
    t0 = time.perf_counter()
    results = run_tournament(cfg, progress=True)
    text = results_csv(results)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    agents = sorted({n for r in results for n in (r.agent_a, r.agent_b)})
    pairs = sorted({(r.agent_a, r.agent_b) for r in results})
    for a, b in pairs:
        print(f"# overall {a} vs {b}: {overall_rate(results, a, b):.4f}", file=sys.stderr)
    for a in agents:
        if a in ("gab", "sab", "gab_p", "sab_p"):
            print(f"# mean step-2 ms per decision {a}: {second_step_share(results, a):.3f}", file=sys.stderr)
    print(f"# wall time {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return 0


def cmd_solve_tiny(args) -> int:
    portfolio = Portfolio.from_names(args.portfolio) if args.portfolio else DEFAULT_PORTFOLIO
    held = strict = 0
    for i in range(args.checks):
        try:
            state = tiny_instance(args.seed + i, units_per_side=args.units)
            free = state.unit_ids(0)[: args.unrestricted] if args.unrestricted >= 0 else state.unit_ids(0)
            rep = theorem1_check(state, portfolio, free, depth_cap=args.depth)
        except ExplosionError as exc:
            print(json.dumps({"seed": args.seed + i, "error": str(exc)}))
            return 3
        except OracleError as exc:
            print(json.dumps({"seed": args.seed + i, "error": str(exc)}))
            return 2
        held += rep.holds
        strict += rep.v_full > rep.v_uniform + 1e-9
        if args.verbose:
            print(json.dumps({"seed": args.seed + i, **rep.as_dict()}))
    print(f"{held}/{args.checks} instances satisfy v_uniform <= v_asymmetric <= v_full "
          f"({strict} with a strict gap)")
    return 0 if held == args.checks else 1


def cmd_replay(args) -> int:
    rec = MatchRecord.from_ndjson(Path(args.trace).read_text())
    if args.verify:
        final = replay(rec)
        ok = abs(ltd2(final, 0) - rec.final_ltd2) < 1e-12 and final.frame == rec.final_frame
        print("replay reconstruction " + ("matches" if ok else "DIFFERS"))
        return 0 if ok else 1
    sys.stdout.write(format_replay(rec))
    return 0


def cmd_bench(args) -> int:
    scen = parse_scenario(args.scenario, seed=args.seed)
    state = generate_scenario(scen)
    evaluate(state)
    n = args.evals
    t0 = time.perf_counter()
    for _ in range(n):
        evaluate(state)
    per = (time.perf_counter() - t0) * 1000.0 / n
    print(f"{scen.name}: playout eval {per:.4f} ms ({1000.0 / per:.0f}/s)")
    if args.agent:
        lat = decision_latencies(args.agent, args.opponent, args.scenario, args.matches, args.budget_ms, args.seed,
                                 both_sides=False)
        print(f"{args.agent} at {args.budget_ms} ms over {len(lat)} decisions: mean {lat.mean():.2f} "
              f"p50 {np.percentile(lat, 50):.2f} p99 {np.percentile(lat, 99):.2f} max {lat.max():.2f} ms")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asymabs", description="Asymmetric action abstractions for combat search")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def budget_flags(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--budget-ms", type=float, help="wall-clock budget per decision")
        g.add_argument("--budget-nodes", type=int, help="evaluation-call budget per decision")

    m = sub.add_parser("run-match", help="play one match")
    m.add_argument("--agents", required=True, help="two names, e.g. gab,pgs")
    m.add_argument("--scenario", default="zl8")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--frame-cap", type=int, default=3000)
    m.add_argument("--config")
    m.add_argument("--replay", help="write an NDJSON trace here")
    budget_flags(m)
    m.set_defaults(func=cmd_run_match)

    t = sub.add_parser("run-tournament", help="play a tournament and print the results CSV")
    t.add_argument("--config")
    t.add_argument("--seed", type=int)
    t.add_argument("--workers", type=int)
    t.add_argument("--matches", type=int)
    t.add_argument("--scenarios")
    t.add_argument("--pairings", help="e.g. gab-pgs,sab-sss")
    t.add_argument("--out")
    budget_flags(t)
    t.set_defaults(func=cmd_run_tournament)

    s = sub.add_parser("solve-tiny", help="check the abstraction value ordering on tiny games")
    s.add_argument("--units", type=int, default=2)
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--checks", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--unrestricted", type=int, default=1, help="number of unrestricted units (-1 for all)")
    s.add_argument("--portfolio")
    s.set_defaults(func=cmd_solve_tiny)

    r = sub.add_parser("replay", help="print or verify an NDJSON trace")
    r.add_argument("trace")
    r.add_argument("--verify", action="store_true")
    r.set_defaults(func=cmd_replay)

    b = sub.add_parser("bench", help="time playouts and, optionally, agent decisions")
    b.add_argument("--scenario", default="zl8")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--evals", type=int, default=2000)
    b.add_argument("--agent")
    b.add_argument("--opponent", default="pgs")
    b.add_argument("--matches", type=int, default=1)
    b.add_argument("--budget-ms", type=float, default=40.0)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
