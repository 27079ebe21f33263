"""Scenario generation, matches, tournaments and replays."""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from asymabs.abstraction import SelectionState, Strategy, select_unrestricted
from asymabs.engine import (DEFAULT_ARENA, DEFAULT_FRAME_CAP, EMPTY_ACTION, UNIT_KINDS, GameState, PlayerAction,
                            Unit, UnitKind, apply, ltd2, winner)
from asymabs.scripts import DEFAULT_PORTFOLIO, SCRIPTS, Portfolio, script_action
from asymabs.search import (PLAYOUT_STEPS, TYPE_SYSTEMS, Evaluator, SearchBudget, gas, pgs, sss, two_step)

log = logging.getLogger(__name__)

WORKERS_ENV = "ASYMABS_WORKERS"
FORFEIT_SLACK_MS = 50.0


class ScenarioError(ValueError):
    pass


# -- scenarios --------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    kinds: tuple[str, ...] = ("Zealot",)
    units_per_side: int = 8
    arena: tuple[int, int] = DEFAULT_ARENA
    placement_jitter: int = 128
    separation_offset: int = 220
    seed: int = 0
    frame_cap: int = DEFAULT_FRAME_CAP

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if not self.kinds:
            raise ScenarioError("a scenario needs at least one unit kind")
        if self.units_per_side % len(self.kinds):
            raise ScenarioError(f"{self.units_per_side} units cannot be split equally among {len(self.kinds)} kinds")

    @property
    def name(self) -> str:
        codes = "".join(UNIT_KINDS[k].code if k in UNIT_KINDS else k for k in self.kinds)
        return f"{codes}{self.units_per_side}"


_CODE_TO_KIND = {k.code: name for name, k in UNIT_KINDS.items()}


def parse_scenario(name: str, **overrides) -> ScenarioConfig:
    """``"zldg8"`` -> Zealots and Dragoons, 8 units per side."""
    m = re.fullmatch(r"((?:[a-z]{2})+?)(\d+)", name.strip().lower())
    if not m:
        raise ScenarioError(f"cannot parse scenario {name!r}; expected e.g. zl8 or zldglgmr8")
    codes = [m.group(1)[i:i + 2] for i in range(0, len(m.group(1)), 2)]
    try:
        kinds = tuple(_CODE_TO_KIND[c] for c in codes)
    except KeyError as exc:
        raise ScenarioError(f"unknown unit code {exc.args[0]!r} in {name!r}") from None
    return ScenarioConfig(kinds=kinds, units_per_side=int(m.group(2)), **overrides)


def generate_scenario(config: ScenarioConfig, kinds: dict[str, UnitKind] | None = None) -> GameState:
    """Mirror-symmetric start: player 0 right of center, player 1 reflected to the left.

    Each of player 0's units is jittered by up to ``placement_jitter`` px
    rightward (and up/down) from the center; player 1 gets the reflection.
    The x coordinates are then pushed apart by ``separation_offset`` per side.
    """
    kinds = kinds or UNIT_KINDS
    w, h = config.arena
    cx, cy = w // 2, h // 2
    j, sep = config.placement_jitter, config.separation_offset
    per_kind = config.units_per_side // len(config.kinds)
    roster = [kinds[k] for k in config.kinds for _ in range(per_kind)]
    for k in set(roster):
        if 2 * (cx + j + sep) + k.width > 2 * w or 2 * (cx - j - sep) - k.width < 0 \
                or 2 * (cy + j) + k.height > 2 * h or 2 * (cy - j) - k.height < 0:
            raise ScenarioError(
                f"{k.name} units do not fit a {w}x{h} arena with jitter {j} and offset {sep}; use a larger arena")
    rng = np.random.default_rng(config.seed)
    n = config.units_per_side
    units = []
    for idx, kind in enumerate(roster):
        dx = int(rng.integers(0, j + 1))
        dy = int(rng.integers(-j, j + 1))
        units.append(Unit(idx, 0, kind, cx + dx + sep, cy + dy))
        units.append(Unit(n + idx, 1, kind, w - (cx + dx + sep), cy + dy))
    return GameState.from_units(units, arena=(w, h), frame_cap=config.frame_cap)


# -- agents -------------------------------------------------------------------------

ALGORITHMS = ("pgs", "sss", "gas", "gab", "sab", "gab_p", "sab_p")

# best settings reported for each two-step algorithm
AGENT_DEFAULTS = {
    "gas": {"selection": "av+", "unrestricted_n": 4},
    "gab": {"selection": "av+", "unrestricted_n": 4},
    "sab": {"selection": "av+", "unrestricted_n": 4},
    "gab_p": {"selection": "av+", "unrestricted_n": 9},
    "sab_p": {"selection": "random", "unrestricted_n": 9},
}


@dataclass
class Decision:
    action: PlayerAction
    elapsed_ms: float
    value: float | None = None
    second_step: bool = False
    second_step_ms: float = 0.0


class Agent:
    """A named decision procedure plus the per-match state it owns."""

    def __init__(self, name: str, portfolio: Portfolio = DEFAULT_PORTFOLIO, selection: str | None = None,
                 unrestricted_n: int | None = None, type_system: str = "kind-hp",
                 playout_steps: int = PLAYOUT_STEPS):
        self.name = name.lower()
        if self.name.startswith("script:"):
            script = self.name.split(":", 1)[1]
            if script not in SCRIPTS:
                raise ValueError(f"unknown script {script!r}")
            self.script = SCRIPTS[script]
            self.algorithm = "script"
        elif self.name in ALGORITHMS:
            self.algorithm = self.name
            self.script = None
        else:
            raise ValueError(f"unknown agent {name!r}; choose from {ALGORITHMS} or script:<name>")
        defaults = AGENT_DEFAULTS.get(self.algorithm, {})
        self.portfolio = portfolio
        self.strategy = Strategy.parse(selection or defaults.get("selection", "av+"))
        self.unrestricted_n = int(unrestricted_n or defaults.get("unrestricted_n", 4))
        self.type_system = TYPE_SYSTEMS[type_system]
        self.evaluator = Evaluator(playout_steps)
        self.selection = SelectionState(self.strategy, self.unrestricted_n, 0)

    def reset(self, seed: int) -> None:
        self.selection = SelectionState(self.strategy, self.unrestricted_n, seed)

    def decide(self, state: GameState, player: int, budget: SearchBudget) -> Decision:
        t0 = time.perf_counter()
        value, used, step2 = None, False, 0.0
        if self.algorithm == "script":
            action = script_action(state, player, self.script)
        elif self.algorithm in ("pgs", "sss", "gas"):
            if self.algorithm == "pgs":
                r = pgs(state, self.portfolio, budget, self.evaluator, player)
            elif self.algorithm == "sss":
                r = sss(state, self.portfolio, budget, self.evaluator, self.type_system, player)
            else:
                free, self.selection = select_unrestricted(state, player, self.selection)
                r = gas(state, self.portfolio, budget, self.evaluator, free, player)
            action, value = r.action, r.value
        else:
            first = "pgs" if self.algorithm.startswith("gab") else "sss"
            r = two_step(state, first, self.portfolio, budget, self.evaluator, self.selection, self.type_system,
                         restrict_moves=self.algorithm.endswith("_p"), player=player)
            if r.selection is not None:
                self.selection = r.selection
            action, value, used, step2 = r.action, r.value, r.used_second_step, r.second_step_ms
        return Decision(action, (time.perf_counter() - t0) * 1000.0, value, used, step2)

    def __repr__(self):
        return f"Agent({self.name})"


def make_agent(name: str, options: dict | None = None) -> Agent:
    opts = dict(options or {})
    algo = name.lower()
    merged = {k: v for k, v in opts.items() if "." not in k}
    prefix = algo + "."
    merged.update({k[len(prefix):]: v for k, v in opts.items() if k.startswith(prefix)})
    kwargs = {}
    if "portfolio" in merged:
        kwargs["portfolio"] = Portfolio.from_names(merged["portfolio"])
    if "selection" in merged:
        kwargs["selection"] = merged["selection"]
    if "unrestricted_n" in merged:
        kwargs["unrestricted_n"] = int(merged["unrestricted_n"])
    if "type_system" in merged:
        kwargs["type_system"] = merged["type_system"]
    if "playout_steps" in merged:
        kwargs["playout_steps"] = int(merged["playout_steps"])
    return Agent(name, **kwargs)


# -- matches ----------------------------------------------------------------------------

OUTCOMES = ("win0", "win1", "draw")


@dataclass
class MatchRecord:
    seed: int
    agents: tuple[str, str]
    initial: dict
    log: list[dict] = field(default_factory=list)
    outcome: str = "draw"
    final_ltd2: float = 0.0
    final_frame: int = 0
    forfeit: int | None = None
    scenario: str = ""

    @property
    def winner(self) -> int | None:
        return {"win0": 0, "win1": 1}.get(self.outcome)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MatchRecord":
        d = json.loads(text)
        d["agents"] = tuple(d["agents"])
        return cls(**d)

    def to_ndjson(self) -> str:
        """Replay trace: a header line, one line per transition, a result line."""
        lines = [json.dumps({"type": "header", "seed": self.seed, "scenario": self.scenario,
                             "agents": list(self.agents), "state": self.initial}, sort_keys=True)]
        lines += [json.dumps({"type": "step", **entry}, sort_keys=True) for entry in self.log]
        lines.append(json.dumps({"type": "result", "outcome": self.outcome, "final_ltd2": self.final_ltd2,
                                 "final_frame": self.final_frame, "forfeit": self.forfeit}, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_ndjson(cls, text: str) -> "MatchRecord":
        recs = [json.loads(line) for line in text.splitlines() if line.strip()]
        head, steps, tail = recs[0], recs[1:-1], recs[-1]
        for s in steps:
            s.pop("type", None)
        return cls(seed=head["seed"], agents=tuple(head["agents"]), initial=head["state"], log=steps,
                   outcome=tail["outcome"], final_ltd2=tail["final_ltd2"], final_frame=tail["final_frame"],
                   forfeit=tail["forfeit"], scenario=head.get("scenario", ""))


def _action_json(action: PlayerAction) -> list[list[int]]:
    return [[u, m.code] for u, m in action]


def _action_from_json(pairs) -> PlayerAction:
    return PlayerAction.from_codes([p[0] for p in pairs], [p[1] for p in pairs])


def outcome_of(state: GameState) -> str:
    w = winner(state)
    return "draw" if w is None else f"win{w}"


def run_match(agent_i: Agent, agent_neg_i: Agent, scenario: GameState, budget: SearchBudget,
              frame_cap: int | None = None, seed: int = 0, forfeit_slack_ms: float | None = FORFEIT_SLACK_MS,
              snapshots: bool = False, timing: bool = True, scenario_name: str = "") -> MatchRecord:
    """Play one match; each player with ready units asks its agent at every decision point.

    ``timing=False`` drops wall-clock fields from the log so that records of
    node-budget matches are byte-for-byte reproducible.
    """
    state = scenario if frame_cap is None else scenario.with_frame_cap(frame_cap)
    agents = (agent_i, agent_neg_i)
    for p, ag in enumerate(agents):
        ag.reset(seed * 2 + p)
    rec = MatchRecord(seed, (agent_i.name, agent_neg_i.name), state.to_dict(), scenario=scenario_name)
    while not state.terminal:
        entry = {"frame": state.frame}
        acts = []
        for p, ag in enumerate(agents):
            if len(state.ready_slots(p)) == 0:
                acts.append(EMPTY_ACTION)
                continue
            d = ag.decide(state, p, budget)
            acts.append(d.action)
            entry[f"p{p}"] = {"action": _action_json(d.action), "value": d.value,
                              "second_step": d.second_step}
            if timing:
                entry[f"p{p}"].update(elapsed_ms=round(d.elapsed_ms, 3), second_step_ms=round(d.second_step_ms, 3))
            if (forfeit_slack_ms is not None and budget.mode == "wallclock"
                    and d.elapsed_ms > budget.cap + forfeit_slack_ms):
                rec.forfeit = p
        if rec.forfeit is not None:
            rec.log.append(entry)
            rec.outcome = f"win{1 - rec.forfeit}"
            break
        state = apply(state, acts[0], acts[1])
        if snapshots:
            entry["units"] = state.table.tolist()
        rec.log.append(entry)
    else:
        rec.outcome = outcome_of(state)
    rec.final_ltd2 = ltd2(state, 0)
    rec.final_frame = state.frame
    return rec


def replay(record: MatchRecord) -> GameState:
    """Re-apply the logged actions from the recorded initial state."""
    state = GameState.from_dict(record.initial)
    for entry in record.log:
        if state.terminal:
            break
        a0 = _action_from_json(entry["p0"]["action"]) if "p0" in entry else EMPTY_ACTION
        a1 = _action_from_json(entry["p1"]["action"]) if "p1" in entry else EMPTY_ACTION
        if record.forfeit is not None and entry is record.log[-1]:
            break
        state = apply(state, a0, a1)
    return state


def format_replay(record: MatchRecord) -> str:
    """Human-readable rendering of a trace."""
    out = io.StringIO()
    out.write(f"match seed={record.seed} scenario={record.scenario or '?'} "
              f"agents={record.agents[0]} vs {record.agents[1]}\n")
    state = GameState.from_dict(record.initial)
    out.write(f"start: {state.alive(0)} vs {state.alive(1)} units, arena {state.arena[0]}x{state.arena[1]}\n")
    for entry in record.log:
        parts = []
        for p in (0, 1):
            e = entry.get(f"p{p}")
            if e:
                moves = " ".join(f"{u}:{PlayerAction.from_codes([u], [c])[0]!r}" for u, c in e["action"])
                ms = f" {e['elapsed_ms']:.1f}ms" if "elapsed_ms" in e else ""
                parts.append(f"p{p}[{moves}]{ms}")
        out.write(f"f{entry['frame']:>5}  " + "  ".join(parts) + "\n")
    out.write(f"result: {record.outcome} ltd2={record.final_ltd2:.4f} frame={record.final_frame}"
              + (f" (player {record.forfeit} forfeited)" if record.forfeit is not None else "") + "\n")
    return out.getvalue()


# -- tournaments ---------------------------------------------------------------------------

def decision_latencies(agent: str, opponent: str, scenario: str, matches: int, budget_ms: float = 40.0,
                       seed: int = 0, both_sides: bool = True, frame_cap: int | None = None) -> np.ndarray:
    """Wall-clock decision latencies (ms) over ``matches`` seeded matches.

    Sides alternate between matches.  With ``both_sides`` the opponent's
    decisions are pooled in as well.
    """
    budget = SearchBudget.wallclock(budget_ms)
    a, b = make_agent(agent), make_agent(opponent)
    warm = generate_scenario(parse_scenario(scenario, seed=seed))
    for ag in (a, b):
        ag.decide(warm, 0, SearchBudget.nodes(20))  # compile outside the timed matches
    out: list[float] = []
    for m in range(matches):
        st = generate_scenario(parse_scenario(scenario, seed=seed + m))
        first, second = (a, b) if m % 2 == 0 else (b, a)
        rec = run_match(first, second, st, budget, frame_cap=frame_cap, seed=seed + m, forfeit_slack_ms=None)
        sides = ("p0", "p1") if both_sides else (("p0",) if m % 2 == 0 else ("p1",))
        out += [e[k]["elapsed_ms"] for e in rec.log for k in sides if k in e]
    return np.asarray(out, dtype=float)


DESK_SCENARIOS = ("zl8", "dg8", "zldg8", "zldglg6", "zldglgmr8")
DEFAULT_PAIRINGS = (("gab", "pgs"), ("sab", "sss"), ("gab", "gab_p"), ("gas", "pgs"), ("gas", "gab"))


@dataclass
class TournamentConfig:
    scenarios: tuple[str, ...] = DESK_SCENARIOS
    pairings: tuple[tuple[str, str], ...] = DEFAULT_PAIRINGS
    matches: int = 200
    seed: int = 0
    budget: SearchBudget = SearchBudget.wallclock(40)
    frame_cap: int = DEFAULT_FRAME_CAP
    workers: int = 1
    agent_options: dict = field(default_factory=dict)
    arena: tuple[int, int] = DEFAULT_ARENA
    placement_jitter: int = 128
    separation_offset: int = 220
    forfeit_slack_ms: float | None = FORFEIT_SLACK_MS

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "TournamentConfig":
        parser = configparser.ConfigParser()
        with open(path) as fh:
            parser.read_file(fh)
        return cls.from_parser(parser, **overrides)

    @classmethod
    def from_parser(cls, parser: configparser.ConfigParser, **overrides) -> "TournamentConfig":
        kw: dict = {}
        if parser.has_section("scenario"):
            sc = parser["scenario"]
            if "names" in sc:
                kw["scenarios"] = tuple(_split(sc["names"]))
            if "arena" in sc:
                w, h = sc["arena"].lower().split("x")
                kw["arena"] = (int(w), int(h))
            if "placement_jitter" in sc:
                kw["placement_jitter"] = sc.getint("placement_jitter")
            if "separation_offset" in sc:
                kw["separation_offset"] = sc.getint("separation_offset")
            if "frame_cap" in sc:
                kw["frame_cap"] = sc.getint("frame_cap")
        if parser.has_section("agents"):
            ag = dict(parser["agents"])
            if "pairings" in ag:
                kw["pairings"] = tuple(tuple(p.split("-", 1)) for p in _split(ag.pop("pairings")))
            kw["agent_options"] = ag
        if parser.has_section("budget"):
            b = parser["budget"]
            mode = b.get("mode", "wallclock")
            if mode == "nodes":
                kw["budget"] = SearchBudget.nodes(b.getint("nodes", 2000))
            else:
                kw["budget"] = SearchBudget.wallclock(b.getfloat("ms", 40.0))
            if "playout_steps" in b:
                kw.setdefault("agent_options", {})["playout_steps"] = b["playout_steps"]
            if "forfeit_slack_ms" in b:
                v = b["forfeit_slack_ms"].strip().lower()
                kw["forfeit_slack_ms"] = None if v in ("none", "off", "") else float(v)
        if parser.has_section("tournament"):
            t = parser["tournament"]
            if "matches" in t:
                kw["matches"] = t.getint("matches")
            if "seed" in t:
                kw["seed"] = t.getint("seed")
            if "workers" in t:
                kw["workers"] = t.getint("workers")
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)


def _split(text: str) -> list[str]:
    return [p.strip() for p in re.split(r"[,\s]+", text) if p.strip()]


def resolve_workers(requested: int) -> int:
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else max(1, requested)


@dataclass(frozen=True)
class _Task:
    index: int
    scenario: str
    pair: tuple[str, str]
    match: int
    swapped: bool
    scenario_seed: int
    match_seed: int


def _tasks(cfg: TournamentConfig) -> list[_Task]:
    tasks = []
    for si, sc in enumerate(cfg.scenarios):
        for pi, pair in enumerate(cfg.pairings):
            for m in range(cfg.matches):
                ss = np.random.SeedSequence([cfg.seed, si, m // 2])
                ms = np.random.SeedSequence([cfg.seed, si, pi, m])
                tasks.append(_Task(len(tasks), sc, tuple(pair), m, bool(m % 2),
                                   int(ss.generate_state(1)[0]), int(ms.generate_state(1)[0])))
    return tasks


def _play_task(task: _Task, cfg: TournamentConfig) -> dict:
    a, b = task.pair
    scfg = parse_scenario(task.scenario, arena=cfg.arena, placement_jitter=cfg.placement_jitter,
                          separation_offset=cfg.separation_offset, seed=task.scenario_seed,
                          frame_cap=cfg.frame_cap)
    state = generate_scenario(scfg)
    agents = [make_agent(a, cfg.agent_options), make_agent(b, cfg.agent_options)]
    if task.swapped:
        agents.reverse()
    try:
        rec = run_match(agents[0], agents[1], state, cfg.budget, seed=task.match_seed,
                        forfeit_slack_ms=cfg.forfeit_slack_ms, timing=True)
    except Exception as exc:  # noqa: BLE001 - reported per pairing
        return {"index": task.index, "error": f"{type(exc).__name__}: {exc}"}
    w = rec.winner
    if w is None:
        result = "draw"
    else:
        result = "a" if (w == 0) != task.swapped else "b"
    stats = {"a": _side_stats(rec, 1 if task.swapped else 0), "b": _side_stats(rec, 0 if task.swapped else 1)}
    return {"index": task.index, "result": result, "stats": stats, "forfeit": rec.forfeit is not None,
            "frames": rec.final_frame, "decisions": len(rec.log)}


def _side_stats(rec: MatchRecord, p: int) -> dict:
    key = f"p{p}"
    entries = [e[key] for e in rec.log if key in e]
    lat = [e.get("elapsed_ms", 0.0) for e in entries]
    step2 = [e.get("second_step_ms", 0.0) for e in entries if e.get("second_step")]
    return {"decisions": len(entries), "latency_ms": lat, "second_steps": len(step2),
            "second_step_ms_sum": float(sum(step2))}


def _run_one(args):
    task, cfg = args
    return _play_task(task, cfg)


@dataclass
class PairingResult:
    scenario: str
    agent_a: str
    agent_b: str
    matches: int = 0
    wins_a: int = 0
    wins_b: int = 0
    draws: int = 0
    errors: list[str] = field(default_factory=list)
    forfeits: int = 0
    stats: dict = field(default_factory=lambda: {"a": [], "b": []})

    @property
    def rate_a(self) -> float:
        return (self.wins_a + 0.5 * self.draws) / self.matches if self.matches else float("nan")

    @property
    def status(self) -> str:
        return "partial" if self.errors else "ok"


def run_tournament(cfg: TournamentConfig, progress: bool = False) -> list[PairingResult]:
    """Play every pairing on every scenario; sides alternate match by match.

    Matches ``2k`` and ``2k+1`` of a pairing share one scenario with the sides
    swapped.  Seeds depend only on (tournament seed, indices), so the worker
    count never changes the results.
    """
    if len(cfg.pairings) < 1 or len(cfg.scenarios) < 1:
        raise ValueError("a tournament needs at least one scenario and one pairing of two agents")
    tasks = _tasks(cfg)
    workers = resolve_workers(cfg.workers)
    results: list[dict] = [None] * len(tasks)  # type: ignore[list-item]
    if workers == 1:
        for t in tasks:
            results[t.index] = _play_task(t, cfg)
            if progress and (t.index + 1) % 10 == 0:
                log.info("%d/%d matches", t.index + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for n, r in enumerate(pool.map(_run_one, [(t, cfg) for t in tasks], chunksize=1)):
                results[r["index"]] = r
                if progress and (n + 1) % 10 == 0:
                    log.info("%d/%d matches", n + 1, len(tasks))

    table: dict = {}
    for t in tasks:
        key = (t.scenario, t.pair)
        pr = table.setdefault(key, PairingResult(t.scenario, t.pair[0], t.pair[1]))
        r = results[t.index]
        if "error" in r:
            pr.errors.append(r["error"])
            continue
        pr.matches += 1
        if r["result"] == "a":
            pr.wins_a += 1
        elif r["result"] == "b":
            pr.wins_b += 1
        else:
            pr.draws += 1
        pr.forfeits += int(r["forfeit"])
        pr.stats["a"].append(r["stats"]["a"])
        pr.stats["b"].append(r["stats"]["b"])
    return list(table.values())


CSV_FIELDS = ("scenario", "agent_a", "agent_b", "matches", "wins_a", "draws", "rate_a", "status")


def results_csv(results: Iterable[PairingResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in results:
        w.writerow([r.scenario, r.agent_a, r.agent_b, r.matches, r.wins_a, r.draws, f"{r.rate_a:.4f}", r.status])
    return buf.getvalue()


def overall_rate(results: Sequence[PairingResult], a: str, b: str) -> float:
    """Pooled winning rate of ``a`` over ``b`` across scenarios."""
    rows = [r for r in results if (r.agent_a, r.agent_b) == (a, b)]
    n = sum(r.matches for r in rows)
    return sum(r.wins_a + 0.5 * r.draws for r in rows) / n if n else float("nan")


def second_step_share(results: Sequence[PairingResult], agent: str) -> float:
    """Mean step-2 milliseconds per decision of ``agent`` over all its matches."""
    total, n = 0.0, 0
    for r in results:
        for side, name in (("a", r.agent_a), ("b", r.agent_b)):
            if name != agent:
                continue
            for s in r.stats[side]:
                total += s["second_step_ms_sum"]
                n += s["decisions"]
    return total / n if n else float("nan")
