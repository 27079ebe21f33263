"""Brute-force game values for tiny combats.

Values are computed by backward induction over simultaneous-move matrix
games.  Each stage game is solved exactly by enumerating square supports
(every finite zero-sum game has an optimal pair supported on a nonsingular
square kernel), so inequalities between values need only round-off slack.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from asymabs import _kernels as kn
from asymabs.abstraction import AbstractionSpec, action_factors, enumerate_actions, script_moves
from asymabs.engine import (EMPTY_ACTION, GameState, PlayerAction, Unit, UnitKind, UNIT_KINDS, apply, joint_codes,
                            legal_moves, ltd2, ready_units, step_codes)
from asymabs.scripts import DEFAULT_PORTFOLIO, NOKAV, Portfolio, Script, script_action

TOL = 1e-6
EXPLOSION_LIMIT = 512


class OracleError(RuntimeError):
    pass


class ExplosionError(OracleError):
    def __init__(self, rows: int, cols: int, frame: int, limit: int):
        super().__init__(f"node at frame {frame} has {rows} x {cols} = {rows * cols} joint actions (limit {limit})")
        self.rows, self.cols = rows, cols


@dataclass(frozen=True)
class MatrixGame:
    payoff: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.payoff, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise ValueError("payoff must be a nonempty 2-D matrix")
        if not np.all(np.isfinite(a)):
            raise ValueError("payoff entries must be finite")
        object.__setattr__(self, "payoff", a)


@dataclass(frozen=True)
class GameValueResult:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray


def _saddle(a: np.ndarray):
    row_mins = a.min(axis=1)
    col_maxs = a.max(axis=0)
    i = int(np.argmax(row_mins))
    j = int(np.argmin(col_maxs))
    if row_mins[i] == col_maxs[j]:
        return i, j, float(row_mins[i])
    return None


def _reduce(a: np.ndarray):
    """Iteratively drop weakly dominated rows and columns (value is preserved)."""
    rows = list(range(a.shape[0]))
    cols = list(range(a.shape[1]))
    changed = True
    while changed:
        changed = False
        sub = a[np.ix_(rows, cols)]
        for r in range(len(rows)):
            if any(q != r and np.all(sub[q] >= sub[r]) and (np.any(sub[q] > sub[r]) or q < r)
                   for q in range(len(rows))):
                del rows[r]
                changed = True
                break
        if changed:
            continue
        for c in range(len(cols)):
            if any(q != c and np.all(sub[:, q] <= sub[:, c]) and (np.any(sub[:, q] < sub[:, c]) or q < c)
                   for q in range(len(cols))):
                del cols[c]
                changed = True
                break
    return rows, cols


def _kernel_solution(a: np.ndarray, rows, cols, tol):
    k = len(rows)
    m = a[np.ix_(rows, cols)]
    # row player: x^T m = v 1, sum x = 1
    lhs = np.zeros((k + 1, k + 1))
    lhs[:k, :k] = m.T
    lhs[:k, k] = -1.0
    lhs[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        sx = np.linalg.solve(lhs, rhs)
        lhs[:k, :k] = m
        sy = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        return None
    x, v = sx[:k], sx[k]
    y = sy[:k]
    if abs(v - sy[k]) > tol or np.any(x < -tol) or np.any(y < -tol):
        return None
    full_x = np.zeros(a.shape[0])
    full_y = np.zeros(a.shape[1])
    full_x[rows] = np.clip(x, 0.0, None)
    full_y[cols] = np.clip(y, 0.0, None)
    full_x /= full_x.sum()
    full_y /= full_y.sum()
    if np.max(a @ full_y) > v + tol or np.min(full_x @ a) < v - tol:
        return None
    return float(v), full_x, full_y


def solve_matrix_game(game: MatrixGame | np.ndarray, tol: float = 1e-9) -> GameValueResult:
    """Exact value and optimal mixed strategies of a zero-sum matrix game (row player maximises)."""
    a = game.payoff if isinstance(game, MatrixGame) else MatrixGame(game).payoff
    m, n = a.shape
    scale = max(1.0, float(np.max(np.abs(a))))
    eps = tol * scale
    hit = _saddle(a)
    if hit is not None:
        i, j, v = hit
        x = np.zeros(m)
        y = np.zeros(n)
        x[i] = y[j] = 1.0
        return GameValueResult(v, x, y)

    rows, cols = _reduce(a)
    sub = a[np.ix_(rows, cols)]
    hit = _saddle(sub)
    if hit is not None:
        i, j, v = hit
        x = np.zeros(m)
        y = np.zeros(n)
        x[rows[i]] = y[cols[j]] = 1.0
        if np.max(a @ y) <= v + eps and np.min(x @ a) >= v - eps:
            return GameValueResult(v, x, y)

    for candidates in ((rows, cols), (list(range(m)), list(range(n)))):
        r_all, c_all = candidates
        for k in range(1, min(len(r_all), len(c_all)) + 1):
            for rs in itertools.combinations(r_all, k):
                for cs in itertools.combinations(c_all, k):
                    sol = _kernel_solution(a, list(rs), list(cs), eps)
                    if sol is not None:
                        return GameValueResult(*sol)
    raise OracleError("support enumeration found no equilibrium")


# -- game values ------------------------------------------------------------------------

def _player_actions(state: GameState, player: int, spec: AbstractionSpec | None) -> list[PlayerAction]:
    if len(state.ready_slots(player)) == 0:
        return [EMPTY_ACTION]
    if spec is None:
        spec = AbstractionSpec.unabstracted()
    return list(enumerate_actions(state, player, spec))


def _count(state: GameState, player: int, spec: AbstractionSpec | None) -> int:
    if len(state.ready_slots(player)) == 0:
        return 1
    _, factors = action_factors(state, player, spec or AbstractionSpec.unabstracted())
    return int(np.prod([len(f) for f in factors]))


def game_value(state: GameState, abstraction_i: AbstractionSpec, depth_cap: int,
               limit: int = EXPLOSION_LIMIT, _memo: dict | None = None) -> float:
    """Value for player 0 when it is limited to ``abstraction_i`` and player 1 is unrestricted.

    Terminal states score their utility, states at the depth cap their LTD2.
    """
    memo = {} if _memo is None else _memo
    key = (state, depth_cap)
    if key in memo:
        return memo[key]
    if state.terminal or depth_cap <= 0:
        v = ltd2(state, 0)
        memo[key] = v
        return v
    nr = _count(state, 0, abstraction_i)
    nc = _count(state, 1, None)
    if nr * nc > limit:
        raise ExplosionError(nr, nc, state.frame, limit)
    rows = _player_actions(state, 0, abstraction_i)
    cols = _player_actions(state, 1, None)
    payoff = np.empty((len(rows), len(cols)))
    for i, a in enumerate(rows):
        for j, b in enumerate(cols):
            child = step_codes(state, joint_codes(state, a, b, check=False))
            payoff[i, j] = game_value(child, abstraction_i, depth_cap - 1, limit, memo)
    v = solve_matrix_game(payoff).value
    memo[key] = v
    return v


@dataclass(frozen=True)
class ValueOrderReport:
    v_uniform: float
    v_asymmetric: float
    v_full: float
    holds: bool

    def as_dict(self) -> dict:
        return dict(v_uniform=self.v_uniform, v_asymmetric=self.v_asymmetric, v_full=self.v_full, holds=self.holds)


def theorem1_check(state: GameState, portfolio: Portfolio = DEFAULT_PORTFOLIO, unrestricted=(),
                   depth_cap: int = 2, limit: int = EXPLOSION_LIMIT, tol: float = TOL) -> ValueOrderReport:
    """Compare values under the uniform, asymmetric and unabstracted spaces of player 0."""
    vu = game_value(state, AbstractionSpec.uniform(portfolio), depth_cap, limit)
    va = game_value(state, AbstractionSpec.asymmetric(unrestricted, portfolio), depth_cap, limit)
    vf = game_value(state, AbstractionSpec.unabstracted(portfolio), depth_cap, limit)
    return ValueOrderReport(vu, va, vf, bool(va >= vu - tol and vf >= va - tol))


def check_subset_chain(state: GameState, player: int, portfolio: Portfolio, unrestricted) -> bool:
    """Uniform actions ⊆ asymmetric actions ⊆ legal actions, by explicit enumeration."""
    if len(state.ready_slots(player)) == 0:
        return True
    uni = set(enumerate_actions(state, player, AbstractionSpec.uniform(portfolio)))
    asym = set(enumerate_actions(state, player, AbstractionSpec.asymmetric(unrestricted, portfolio)))
    full = set(enumerate_actions(state, player, AbstractionSpec.unabstracted(portfolio)))
    return uni <= asym <= full


def mft_brute_force(state: GameState, first_action: PlayerAction, unrestricted, depth: int,
                    evaluate, portfolio: Portfolio = DEFAULT_PORTFOLIO, default_script: Script = NOKAV,
                    restrict_moves: bool = False) -> tuple[PlayerAction, float]:
    """Exhaustive max over the move-fixed tree of player 0, built from the public engine API.

    ``evaluate(state) -> float`` scores leaves for player 0.  Root ties go to
    the first action in enumeration order, with ``first_action`` first.
    """
    free = frozenset(unrestricted)

    def options(s: GameState, uid: int, fixed: PlayerAction):
        if uid not in free:
            return [fixed.of(uid)]
        return list(script_moves(s, uid, portfolio) if restrict_moves else legal_moves(s, uid))

    def actions(s: GameState, fixed: PlayerAction):
        uids = ready_units(s, 0)
        for combo in itertools.product(*(options(s, u, fixed) for u in uids)):
            yield PlayerAction(tuple(uids), tuple(combo))

    def opp(s: GameState) -> PlayerAction:
        return script_action(s, 1, default_script) if ready_units(s, 1) else EMPTY_ACTION

    def value(s: GameState, d: int) -> float:
        if s.terminal or d == 0:
            return float(evaluate(s))
        mine = script_action(s, 0, default_script) if ready_units(s, 0) else EMPTY_ACTION
        return max(value(apply(s, a, opp(s)), d - 1) for a in actions(s, mine))

    roots = [first_action] + [a for a in actions(state, first_action) if a != first_action]
    best, best_v = None, None
    for a in roots:
        v = value(apply(state, a, opp(state)), depth - 1)
        if best_v is None or v > best_v:
            best, best_v = a, v
    return best, best_v


# -- tiny instances -------------------------------------------------------------------

TINY_ARENA_HEIGHT = 120


def tiny_instance(seed: int, units_per_side: int = 2, kinds: dict[str, UnitKind] | None = None,
                  max_moves: int = 3, limit: int = EXPLOSION_LIMIT, tries: int = 10_000,
                  depth: int = 0) -> GameState:
    """A random small combat in a narrow walled strip.

    The strip is as wide as the widest unit, so nobody can step sideways,
    and short enough that units meet quickly.  Draws are rejected until every
    unit has at most ``max_moves`` legal moves and the root fits ``limit``.
    With ``depth`` > 0 every node of the unabstracted tree down to that depth
    must fit ``limit`` as well.
    """
    kinds = dict(kinds or UNIT_KINDS)
    names = sorted(kinds)
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        chosen = [kinds[names[rng.integers(len(names))]] for _ in range(units_per_side * 2)]
        width = max(k.width for k in chosen)
        units = []
        for idx, kind in enumerate(chosen):
            owner = 0 if idx < units_per_side else 1
            lo = (kind.height + 1) // 2
            hi = TINY_ARENA_HEIGHT - lo
            y = int(rng.integers(lo, hi + 1))
            hp = int(rng.integers(1, kind.hp0 + 1))
            ready = int(rng.integers(0, 2)) * int(rng.integers(1, 4))
            cdf = int(rng.integers(0, 2)) * int(rng.integers(1, kind.cooldown + 1))
            units.append(Unit(idx, owner, kind, width // 2, y, hp, ready, cdf))
        state = GameState.from_units(units, arena=(width, TINY_ARENA_HEIGHT), frame=0, frame_cap=200)
        frame = int(state.table[:, kn.READY].min())
        state = GameState(state.table, state.kinds, frame, state.arena, state.frame_cap)
        if state.terminal:
            continue
        if not all(len(state.ready_slots(p)) for p in (0, 1)):
            continue
        moves = [len(kn.legal_codes(state.table, state.kind_table, state.frame, *state.arena, s))
                 for s in np.concatenate([state.ready_slots(0), state.ready_slots(1)])]
        if max(moves) > max_moves:
            continue
        if _count(state, 0, None) * _count(state, 1, None) > limit:
            continue
        if depth > 0:
            try:
                game_value(state, AbstractionSpec.unabstracted(), depth, limit)
            except ExplosionError:
                continue
        return state
    raise OracleError(f"no tiny instance found for seed {seed}")
