"""Real-time decision procedures over script-induced abstractions.

All searches decide for ``player`` (default 0) and maximise the playout
evaluation from that player's point of view.  The opponent's action is fixed
inside the search: to its seeded script action in the hill climbers, and to the
default script (NOKAV) in the move-fixed tree.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from asymabs import _kernels as kn
from asymabs.abstraction import SelectionState, _legal_factor, _script_factor, portfolio_codes, select_unrestricted
from asymabs.engine import EngineError, GameState, PlayerAction, opponent, step_codes
from asymabs.scripts import DEFAULT_PORTFOLIO, NOKAV, Portfolio, Script, script_codes

PLAYOUT_STEPS = 100
MAX_MFT_DEPTH = 64


# -- budgets -------------------------------------------------------------------

@dataclass(frozen=True)
class SearchBudget:
    """Either a wall-clock limit in milliseconds or a cap on evaluation calls."""

    mode: str = "wallclock"
    cap: float = 40.0

    def __post_init__(self):
        if self.mode not in ("wallclock", "nodes"):
            raise ValueError(f"unknown budget mode {self.mode!r}")

    @classmethod
    def wallclock(cls, ms: float) -> "SearchBudget":
        return cls("wallclock", float(ms))

    @classmethod
    def nodes(cls, n: int) -> "SearchBudget":
        return cls("nodes", int(n))

    def start(self) -> "Clock":
        return Clock(self)


class Clock:
    """Running budget of one decision.  Counts evaluation calls in both modes."""

    def __init__(self, budget: SearchBudget):
        self.budget = budget
        self.evals = 0
        self.t0 = time.perf_counter()
        self._reserved = 0.0
        self._eval_s = 0.0

    @property
    def elapsed_ms(self) -> float:
        return (time.perf_counter() - self.t0) * 1000.0

    @property
    def exhausted(self) -> bool:
        if self.budget.mode == "nodes":
            return self.evals >= self.budget.cap - self._reserved
        return self.elapsed_ms >= self.budget.cap - self._reserved

    @property
    def remaining(self) -> float:
        if self.budget.mode == "nodes":
            return max(0.0, self.budget.cap - self.evals)
        return max(0.0, self.budget.cap - self.elapsed_ms)

    def mean_eval_ms(self) -> float:
        return 1000.0 * self._eval_s / self.evals if self.evals else 0.0

    def reserve(self, evals: int) -> None:
        """Hold back room for ``evals`` evaluations until :meth:`release`."""
        if self.budget.mode == "nodes":
            self._reserved = float(evals)
        else:
            self._reserved = evals * self.mean_eval_ms()

    def release(self) -> None:
        self._reserved = 0.0


class OutOfBudget(Exception):
    pass


# -- evaluation ------------------------------------------------------------------

def evaluate(state: GameState, steps: int = PLAYOUT_STEPS, player: int = 0) -> float:
    """Play NOKAV against NOKAV for up to ``steps`` transitions, return LTD2 for ``player``."""
    return float(kn.playout(state.table, state.kind_table, state.frame, state.frame_cap, *state.arena, steps, player))


class Evaluator:
    """Playout evaluation with a fused transition-then-playout fast path.

    ``fn`` replaces the playout with any ``state -> value for player 0``.
    """

    def __init__(self, steps: int = PLAYOUT_STEPS, fn: Callable[[GameState], float] | None = None):
        self.steps = steps
        self.fn = fn

    def __call__(self, state: GameState, player: int = 0) -> float:
        if self.fn is not None:
            v = float(self.fn(state))
            return v if player == 0 else -v
        return evaluate(state, self.steps, player)

    def after(self, state: GameState, codes: np.ndarray, player: int) -> float:
        if self.fn is not None:
            return self(step_codes(state, codes), player)
        return float(kn.step_then_playout(
            state.table, state.kind_table, state.frame, state.frame_cap, *state.arena, codes, self.steps, player))


def _as_evaluator(ev) -> Evaluator:
    if ev is None:
        return Evaluator()
    if isinstance(ev, Evaluator):
        return ev
    return Evaluator(fn=ev)


class _Ctx:
    """Shared plumbing for one search invocation at one state."""

    def __init__(self, state: GameState, player: int, ev, clock: Clock):
        if state.terminal:
            raise EngineError("search called on a terminal state")
        self.state = state
        self.player = player
        self.opp = opponent(player)
        self.ev = _as_evaluator(ev)
        self.clock = clock
        self.slots = state.ready_slots(player)
        self.opp_slots = state.ready_slots(self.opp)
        if len(self.slots) == 0:
            raise EngineError(f"player {player} has no ready unit at frame {state.frame}")
        self.args = (state.table, state.kind_table, state.frame, state.arena[0], state.arena[1])

    def value(self, codes: np.ndarray, state: GameState | None = None) -> float:
        if self.clock.exhausted:
            raise OutOfBudget
        t = time.perf_counter()
        v = self.ev.after(state or self.state, codes, self.player)
        self.clock._eval_s += time.perf_counter() - t
        self.clock.evals += 1
        return v

    def leaf(self, state: GameState) -> float:
        if self.clock.exhausted:
            raise OutOfBudget
        t = time.perf_counter()
        v = self.ev(state, self.player)
        self.clock._eval_s += time.perf_counter() - t
        self.clock.evals += 1
        return v

    def script(self, script: Script, who: int) -> np.ndarray:
        return script_codes(self.state, who, script)

    def in_context(self, script: Script, s: int, codes: np.ndarray) -> int:
        return int(kn.script_in_context(script.kernel, *self.args, s, codes))

    def action(self, codes: np.ndarray) -> PlayerAction:
        return PlayerAction.from_codes(self.state.table[self.slots, kn.ID], codes[self.slots])


def _merge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = a.copy()
    m = b >= 0
    out[m] = b[m]
    return out


# -- first step: hill climbing -----------------------------------------------------

@dataclass
class FirstStepResult:
    action: PlayerAction
    hit_local_max: bool
    clock: Clock
    value: float | None = None
    codes: np.ndarray | None = field(default=None, repr=False)
    passes: int = 0

    @property
    def remaining(self) -> float:
        return self.clock.remaining


def _seed_scripts(ctx: _Ctx, portfolio: Portfolio) -> tuple[Script, Script]:
    """Pick each side's script by evaluating it against the other side's NOKAV action."""
    nok_i = ctx.script(NOKAV, ctx.player)
    nok_o = ctx.script(NOKAV, ctx.opp)
    best_i, best_o = portfolio[0], portfolio[0]
    try:
        vi = None
        for sc in portfolio:
            v = ctx.value(_merge(ctx.script(sc, ctx.player), nok_o))
            if vi is None or v > vi:
                best_i, vi = sc, v
        if len(ctx.opp_slots):
            vo = None
            for sc in portfolio:
                v = -ctx.value(_merge(nok_i, ctx.script(sc, ctx.opp)))
                if vo is None or v > vo:
                    best_o, vo = sc, v
    except OutOfBudget:
        pass
    return best_i, best_o


def _hill_climb(ctx: _Ctx, codes: np.ndarray, candidates: Callable[[int, np.ndarray], Iterable[np.ndarray]],
                groups: Sequence) -> FirstStepResult:
    """Greedy improvement loop shared by PGS, SSS and GAS.

    ``candidates(g, codes)`` yields full joint-code arrays for group ``g``; a
    candidate replaces the incumbent only if it evaluates strictly higher.
    """
    passes = 0
    try:
        cur = ctx.value(codes)
    except OutOfBudget:
        return FirstStepResult(ctx.action(codes), False, ctx.clock, None, codes, 0)
    try:
        while not ctx.clock.exhausted:
            changed = False
            for g in groups:
                for cand in candidates(g, codes):
                    if np.array_equal(cand, codes):
                        continue
                    v = ctx.value(cand)
                    if v > cur:
                        codes, cur, changed = cand, v, True
            passes += 1
            if not changed:
                return FirstStepResult(ctx.action(codes), True, ctx.clock, cur, codes, passes)
    except OutOfBudget:
        pass
    return FirstStepResult(ctx.action(codes), False, ctx.clock, cur, codes, passes)


def _budget_clock(budget) -> Clock:
    return budget if isinstance(budget, Clock) else budget.start()


def pgs(state: GameState, portfolio: Portfolio = DEFAULT_PORTFOLIO, budget: SearchBudget | Clock = SearchBudget(),
        evaluate=None, player: int = 0) -> FirstStepResult:
    """Portfolio Greedy Search with the opponent held at its seeded script action."""
    ctx = _Ctx(state, player, evaluate, _budget_clock(budget))
    si, so = _seed_scripts(ctx, portfolio)
    codes = _merge(ctx.script(si, player), ctx.script(so, ctx.opp))

    def candidates(s, cur):
        for sc in portfolio:
            cand = cur.copy()
            cand[s] = ctx.in_context(sc, s, cur)
            yield cand

    return _hill_climb(ctx, codes, candidates, list(ctx.slots))


def gas(state: GameState, portfolio: Portfolio = DEFAULT_PORTFOLIO, budget: SearchBudget | Clock = SearchBudget(),
        evaluate=None, selection: SelectionState | Iterable[int] = SelectionState(), player: int = 0) -> FirstStepResult:
    """PGS whose unrestricted units try every legal move instead of the script moves."""
    ctx = _Ctx(state, player, evaluate, _budget_clock(budget))
    unrestricted, _ = _resolve_selection(state, player, selection)
    si, so = _seed_scripts(ctx, portfolio)
    codes = _merge(ctx.script(si, player), ctx.script(so, ctx.opp))
    free = {int(s) for s in ctx.slots if int(state.table[s, kn.ID]) in unrestricted}

    def candidates(s, cur):
        if s in free:
            options = _legal_factor(state, s)
        else:
            options = [ctx.in_context(sc, s, cur) for sc in portfolio]
        for c in options:
            cand = cur.copy()
            cand[s] = c
            yield cand

    return _hill_climb(ctx, codes, candidates, [int(s) for s in ctx.slots])


@dataclass(frozen=True)
class TypeSystem:
    """Partition of units into types; SSS assigns one script per type."""

    name: str
    typing: Callable[[GameState, int], Hashable]

    def partition(self, state: GameState, slots: Iterable[int]) -> list[list[int]]:
        groups: dict = {}
        for s in slots:
            label = self.typing(state, int(state.table[s, kn.ID]))
            groups.setdefault(label, []).append(int(s))
        return [groups[k] for k in sorted(groups, key=repr)]


def _kind_hp(state: GameState, uid: int):
    row = state.table[state.slot(uid)]
    hp0 = state.kind_table[row[kn.KIND], kn.HP0]
    return (state.kinds[row[kn.KIND]].name, bool(2 * row[kn.HP] > hp0))


KIND_HP_TYPES = TypeSystem("kind-hp", _kind_hp)
PER_UNIT_TYPES = TypeSystem("per-unit", lambda state, uid: uid)
SINGLE_TYPE = TypeSystem("single", lambda state, uid: 0)
TYPE_SYSTEMS = {t.name: t for t in (KIND_HP_TYPES, PER_UNIT_TYPES, SINGLE_TYPE)}


def sss(state: GameState, portfolio: Portfolio = DEFAULT_PORTFOLIO, budget: SearchBudget | Clock = SearchBudget(),
        evaluate=None, type_system: TypeSystem = KIND_HP_TYPES, player: int = 0) -> FirstStepResult:
    """Stratified Strategy Selection: hill climbing over unit types, NOKAV seeding."""
    ctx = _Ctx(state, player, evaluate, _budget_clock(budget))
    codes = _merge(ctx.script(NOKAV, player), ctx.script(NOKAV, ctx.opp))
    types = type_system.partition(state, ctx.slots)

    def candidates(group, cur):
        for sc in portfolio:
            cand = cur.copy()
            for s in group:
                cand[s] = ctx.in_context(sc, s, cand)
            yield cand

    return _hill_climb(ctx, codes, candidates, types)


# -- second step: ABCD over the move-fixed tree --------------------------------------

@dataclass
class MFTResult:
    action: PlayerAction
    value: float | None
    depth: int
    root_values: dict = field(default_factory=dict, repr=False)


def _resolve_selection(state, player, selection):
    if isinstance(selection, SelectionState):
        return select_unrestricted(state, player, selection)
    return frozenset(int(u) for u in selection), None


def abcd_mft(state: GameState, first_action: PlayerAction, unrestricted: Iterable[int],
             portfolio: Portfolio = DEFAULT_PORTFOLIO, default_script: Script = NOKAV,
             budget: SearchBudget | Clock = SearchBudget(), evaluate=None, restrict_moves: bool = False,
             player: int = 0, max_depth: int = MAX_MFT_DEPTH) -> MFTResult:
    """Iterative-deepening search for the unrestricted units' moves in the move-fixed tree.

    Restricted units keep ``first_action`` at the root and follow
    ``default_script`` below it; the opponent always plays ``default_script``.
    Depth counts transitions.  Leaves and cutoff states are scored with the
    evaluation.  Returns the best root action of the deepest completed
    iteration; if not even depth 1 completes, the best root action evaluated.
    """
    clock = _budget_clock(budget)
    ctx = _Ctx(state, player, evaluate, clock)
    free_ids = frozenset(int(u) for u in unrestricted)
    first = np.full(len(state.table), kn.NO_MOVE, dtype=np.int64)
    for uid, m in first_action:
        first[state.slot(uid)] = m.code
    if not any(int(state.table[s, kn.ID]) in free_ids for s in ctx.slots):
        return MFTResult(first_action, None, 0)

    opp_root = ctx.script(default_script, ctx.opp)
    root_fixed = _merge(first, opp_root)
    root_slots, root_factors = _mft_factors(state, player, ctx.slots, free_ids, portfolio, restrict_moves)

    def fresh_roots():
        yield root_fixed
        for combo in itertools.product(*root_factors):
            c = root_fixed.copy()
            c[root_slots] = combo
            if not np.array_equal(c, root_fixed):
                yield c

    roots: Iterable[np.ndarray] = fresh_roots()
    best_codes, best_value, done_depth = root_fixed, None, 0
    root_values: dict = {}
    for depth in range(1, max_depth + 1):
        scored = []
        it_best, it_val = None, None
        cutoff = [False]
        try:
            for c in roots:
                if depth == 1:
                    v = ctx.value(c)
                    root_values[c.tobytes()] = v
                else:
                    child = step_codes(state, c)
                    v = _mft_value(ctx, child, depth - 1, free_ids, portfolio, default_script, restrict_moves, cutoff)
                scored.append((v, len(scored), c))
                if it_val is None or v > it_val:
                    it_best, it_val = c, v
        except OutOfBudget:
            if depth == 1 and it_best is not None:
                best_codes, best_value = it_best, it_val
            break
        best_codes, best_value, done_depth = it_best, it_val, depth
        if depth > 1 and not cutoff[0]:
            break
        scored.sort(key=lambda t: (-t[0], t[1]))
        roots = [c for _, _, c in scored]
    return MFTResult(ctx.action(best_codes), best_value, done_depth, root_values)


def _mft_factors(state, player, slots, free_ids, portfolio, restrict_moves):
    free_slots, factors = [], []
    table = portfolio_codes(state, player, portfolio) if restrict_moves else None
    for s in slots:
        if int(state.table[s, kn.ID]) not in free_ids:
            continue
        free_slots.append(int(s))
        factors.append(_script_factor(table, s) if restrict_moves else _legal_factor(state, s))
    return np.array(free_slots, dtype=np.int64), factors


def _mft_value(ctx, state, depth, free_ids, portfolio, default_script, restrict_moves, cutoff) -> float:
    if state.terminal:
        return ctx.leaf(state)
    if depth == 0:
        cutoff[0] = True
        return ctx.leaf(state)
    me, opp = ctx.player, ctx.opp
    fixed = _merge(script_codes(state, me, default_script), script_codes(state, opp, default_script))
    slots, factors = _mft_factors(state, me, state.ready_slots(me), free_ids, portfolio, restrict_moves)
    best = None
    for combo in itertools.product(*factors):
        c = fixed.copy()
        if len(slots):
            c[slots] = combo
        v = _mft_value(ctx, step_codes(state, c), depth - 1, free_ids, portfolio, default_script,
                       restrict_moves, cutoff)
        if best is None or v > best:
            best = v
    return best


# -- two-step algorithms --------------------------------------------------------------

@dataclass
class TwoStepResult:
    action: PlayerAction
    first: FirstStepResult
    used_second_step: bool = False
    second_step_ms: float = 0.0
    mft_depth: int = 0
    unrestricted: frozenset = frozenset()
    selection: SelectionState | None = None
    value: float | None = None


def two_step(state: GameState, first_step: str = "pgs", portfolio: Portfolio = DEFAULT_PORTFOLIO,
             budget: SearchBudget | Clock = SearchBudget(), evaluate=None,
             selection: SelectionState | Iterable[int] = SelectionState(), type_system: TypeSystem = KIND_HP_TYPES,
             restrict_moves: bool = False, default_script: Script = NOKAV, player: int = 0) -> TwoStepResult:
    """GAB/SAB (and their script-restricted variants).

    Step 1 runs PGS or SSS.  Only if it stops at a local maximum with budget
    left does step 2 search the move-fixed tree for the unrestricted units.
    The step-2 action replaces the step-1 action unless the step-1 action
    evaluates strictly higher against the opponent's default-script action.
    """
    clock = _budget_clock(budget)
    if first_step == "pgs":
        r1 = pgs(state, portfolio, clock, evaluate, player)
    elif first_step == "sss":
        r1 = sss(state, portfolio, clock, evaluate, type_system, player)
    else:
        raise ValueError(f"unknown first step {first_step!r}")
    sel_out = selection if isinstance(selection, SelectionState) else None
    if not r1.hit_local_max or clock.exhausted:
        return TwoStepResult(r1.action, r1, selection=sel_out)

    t0 = time.perf_counter()
    unrestricted, sel_next = _resolve_selection(state, player, selection)
    if sel_next is not None:
        sel_out = sel_next
    clock.reserve(2)
    r2 = abcd_mft(state, r1.action, unrestricted, portfolio, default_script, clock, evaluate,
                  restrict_moves, player)
    clock.release()
    step2_ms = (time.perf_counter() - t0) * 1000.0

    a1, a2 = r1.action, r2.action
    if a1 == a2:
        return TwoStepResult(a1, r1, True, step2_ms, r2.depth, unrestricted, sel_out, r2.value)
    ctx = _Ctx(state, player, evaluate, clock)
    opp_fixed = ctx.script(default_script, ctx.opp)
    v1 = _cached_value(ctx, a1, opp_fixed, r2.root_values)
    v2 = _cached_value(ctx, a2, opp_fixed, r2.root_values)
    if v1 is not None and (v2 is None or v1 > v2):
        return TwoStepResult(a1, r1, True, step2_ms, r2.depth, unrestricted, sel_out, v1)
    return TwoStepResult(a2, r1, True, step2_ms, r2.depth, unrestricted, sel_out, v2)


def _cached_value(ctx: _Ctx, action: PlayerAction, opp_fixed: np.ndarray, cache: dict) -> float | None:
    codes = opp_fixed.copy()
    for uid, m in action:
        codes[ctx.state.slot(uid)] = m.code
    key = codes.tobytes()
    if key in cache:
        return cache[key]
    # comparison evals are budgeted by the reservation made before step 2
    t = time.perf_counter()
    v = ctx.ev.after(ctx.state, codes, ctx.player)
    ctx.clock._eval_s += time.perf_counter() - t
    ctx.clock.evals += 1
    cache[key] = v
    return v


def gab(state, portfolio=DEFAULT_PORTFOLIO, budget=SearchBudget(), evaluate=None,
        selection=SelectionState(), player=0) -> PlayerAction:
    return two_step(state, "pgs", portfolio, budget, evaluate, selection, player=player).action


def sab(state, portfolio=DEFAULT_PORTFOLIO, budget=SearchBudget(), evaluate=None,
        selection=SelectionState(), type_system=KIND_HP_TYPES, player=0) -> PlayerAction:
    return two_step(state, "sss", portfolio, budget, evaluate, selection, type_system, player=player).action


def gab_p(state, portfolio=DEFAULT_PORTFOLIO, budget=SearchBudget(), evaluate=None,
          selection=SelectionState(n=9), player=0) -> PlayerAction:
    return two_step(state, "pgs", portfolio, budget, evaluate, selection, restrict_moves=True, player=player).action


def sab_p(state, portfolio=DEFAULT_PORTFOLIO, budget=SearchBudget(), evaluate=None,
          selection=SelectionState(strategy="random", n=9), type_system=KIND_HP_TYPES, player=0) -> PlayerAction:
    return two_step(state, "sss", portfolio, budget, evaluate, selection, type_system,
                    restrict_moves=True, player=player).action
