"""Run the desk-scale tournament and write results/<name>.csv plus a run summary.

    python scripts/reproduce_tournament.py --config configs/paper_small.cfg
    python scripts/reproduce_tournament.py --matches 20 --name paper_small_m20

The JSON summary (pooled rates, runtime, worker count, step-2 timings) is what
the acceptance test for the tournament criterion reads.
"""

import argparse
import datetime as dt
import json
import logging
import time
from pathlib import Path

import numpy as np

from asymabs.harness import (TournamentConfig, overall_rate, resolve_workers, results_csv, run_tournament,
                             second_step_share)

ROOT = Path(__file__).resolve().parents[1]


def summarize(cfg, results, runtime_s):
    latencies = [x for r in results for side in ("a", "b") for s in r.stats[side] for x in s["latency_ms"]]
    agents = sorted({r.agent_a for r in results} | {r.agent_b for r in results})
    return {
        "date": dt.date.today().isoformat(),
        "scenarios": list(cfg.scenarios),
        "pairings": ["-".join(p) for p in cfg.pairings],
        "matches_per_pairing_scenario": cfg.matches,
        "seed": cfg.seed,
        "budget": {"mode": cfg.budget.mode, "cap": cfg.budget.cap},
        "workers": resolve_workers(cfg.workers),
        "runtime_s": runtime_s,
        "pooled_rate": {"-".join(p): overall_rate(results, *p) for p in cfg.pairings},
        "matches_per_pairing": {"-".join(p): sum(r.matches for r in results if (r.agent_a, r.agent_b) == p)
                                for p in cfg.pairings},
        "forfeits": sum(r.forfeits for r in results),
        "errors": sum(len(r.errors) for r in results),
        "latency_ms_p50": float(np.percentile(latencies, 50)) if latencies else None,
        "latency_ms_p99": float(np.percentile(latencies, 99)) if latencies else None,
        "second_step_ms_per_decision": {a: second_step_share(results, a) for a in agents},
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=str(ROOT / "configs" / "paper_small.cfg"))
    ap.add_argument("--matches", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--name", help="output stem (default: config file stem)")
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    overrides = {k: v for k, v in (("matches", args.matches), ("workers", args.workers), ("seed", args.seed))
                 if v is not None}
    cfg = TournamentConfig.from_file(args.config, **overrides)
    t0 = time.perf_counter()
    results = run_tournament(cfg, progress=True)
    runtime = time.perf_counter() - t0

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.name or Path(args.config).stem
    (out / f"{stem}.csv").write_text(results_csv(results))
    summary = summarize(cfg, results, runtime)
    (out / f"{stem}.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary["pooled_rate"]), f"runtime {runtime:.0f}s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
