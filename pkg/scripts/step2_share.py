"""Mean time spent in the second step by SAB and GAB on the desk scenarios.

    python scripts/step2_share.py --matches 4

Prints mean step-2 milliseconds per decision and per decision that reached
step 2, and writes results/step2_share.json.
"""

import argparse
import json
from pathlib import Path

from asymabs.harness import DESK_SCENARIOS, TournamentConfig, run_tournament, second_step_share
from asymabs.search import SearchBudget

ROOT = Path(__file__).resolve().parents[1]


def per_step2_decision(results, agent):
    total = n = 0
    for r in results:
        for side, name in (("a", r.agent_a), ("b", r.agent_b)):
            if name == agent:
                for s in r.stats[side]:
                    total += s["second_step_ms_sum"]
                    n += s["second_steps"]
    return total / n if n else float("nan")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--matches", type=int, default=4)
    ap.add_argument("--budget-ms", type=float, default=40.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    args = ap.parse_args(argv)

    cfg = TournamentConfig(scenarios=DESK_SCENARIOS, pairings=(("gab", "pgs"), ("sab", "sss")),
                           matches=args.matches, seed=args.seed, budget=SearchBudget.wallclock(args.budget_ms),
                           workers=args.workers)
    results = run_tournament(cfg)
    summary = {a: {"ms_per_decision": second_step_share(results, a),
                   "ms_per_step2_decision": per_step2_decision(results, a)} for a in ("gab", "sab")}
    summary["sab_exceeds_gab"] = summary["sab"]["ms_per_decision"] > summary["gab"]["ms_per_decision"]
    summary.update(matches=args.matches, budget_ms=args.budget_ms, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "step2_share.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
