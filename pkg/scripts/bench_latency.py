"""Decision latency under a wall-clock budget, written to results/latency_<scenario>.json.

    python scripts/bench_latency.py --scenario zl50 --matches 50
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from asymabs.harness import decision_latencies

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scenario", default="zl50")
    ap.add_argument("--agent", default="gab")
    ap.add_argument("--opponent", default="pgs")
    ap.add_argument("--matches", type=int, default=50)
    ap.add_argument("--budget-ms", type=float, default=40.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    args = ap.parse_args(argv)

    t0 = time.perf_counter()
    lat = decision_latencies(args.agent, args.opponent, args.scenario, args.matches, args.budget_ms, args.seed)
    summary = {
        "scenario": args.scenario, "agents": [args.agent, args.opponent], "matches": args.matches,
        "budget_ms": args.budget_ms, "seed": args.seed, "decisions": int(lat.size),
        "mean_ms": float(lat.mean()), "p50_ms": float(np.percentile(lat, 50)),
        "p99_ms": float(np.percentile(lat, 99)), "max_ms": float(lat.max()),
        "over_45ms": int((lat > 45.0).sum()), "runtime_s": time.perf_counter() - t0,
    }
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"latency_{args.scenario}.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
