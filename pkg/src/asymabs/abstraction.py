"""Script-induced action abstractions and unrestricted-unit selection."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator

import numpy as np

from asymabs import _kernels as kn
from asymabs.engine import EngineError, GameState, Move, PlayerAction, _ready_slot
from asymabs.scripts import DEFAULT_PORTFOLIO, Portfolio, script_codes


class Mode(enum.Enum):
    UNIFORM = "uniform"
    ASYMMETRIC = "asymmetric"
    UNABSTRACTED = "unabstracted"


@dataclass(frozen=True)
class AbstractionSpec:
    portfolio: Portfolio = DEFAULT_PORTFOLIO
    mode: Mode = Mode.UNIFORM
    unrestricted: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "unrestricted", frozenset(self.unrestricted))
        if self.unrestricted and self.mode is not Mode.ASYMMETRIC:
            raise ValueError("an unrestricted set only makes sense for the asymmetric mode")

    @classmethod
    def uniform(cls, portfolio: Portfolio = DEFAULT_PORTFOLIO) -> "AbstractionSpec":
        return cls(portfolio, Mode.UNIFORM)

    @classmethod
    def asymmetric(cls, unrestricted, portfolio: Portfolio = DEFAULT_PORTFOLIO) -> "AbstractionSpec":
        return cls(portfolio, Mode.ASYMMETRIC, frozenset(unrestricted))

    @classmethod
    def unabstracted(cls, portfolio: Portfolio = DEFAULT_PORTFOLIO) -> "AbstractionSpec":
        return cls(portfolio, Mode.UNABSTRACTED)


class EmptyActionError(EngineError):
    """The player has no ready unit, so there is nothing to enumerate."""


def portfolio_codes(state: GameState, player: int, portfolio: Portfolio) -> np.ndarray:
    """``(len(portfolio), n_units)`` array: row j is script j's full action for ``player``."""
    return np.stack([script_codes(state, player, s) for s in portfolio])


def _script_factor(table: np.ndarray, s: int) -> tuple[int, ...]:
    return tuple(sorted(set(table[:, s].tolist())))


def _legal_factor(state: GameState, s: int) -> tuple[int, ...]:
    return tuple(kn.legal_codes(state.table, state.kind_table, state.frame, *state.arena, s).tolist())


def script_moves(state: GameState, uid: int, portfolio: Portfolio = DEFAULT_PORTFOLIO) -> tuple[Move, ...]:
    """Distinct moves the portfolio's scripts give ``uid``, canonical order.

    Each script is evaluated as it would be when building its whole action,
    so the no-overkill ledger holds the moves of lower-id friendly units.
    """
    s = _ready_slot(state, uid)
    owner = int(state.table[s, kn.OWNER])
    table = portfolio_codes(state, owner, portfolio)
    return tuple(Move.from_code(c) for c in _script_factor(table, s))


def action_factors(state: GameState, player: int, spec: AbstractionSpec) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Ready slots of ``player`` and the per-slot candidate move codes under ``spec``."""
    slots = state.ready_slots(player)
    if spec.mode is Mode.UNABSTRACTED:
        return slots, [_legal_factor(state, s) for s in slots]
    table = portfolio_codes(state, player, spec.portfolio)
    factors = []
    for s in slots:
        if spec.mode is Mode.ASYMMETRIC and int(state.table[s, kn.ID]) in spec.unrestricted:
            factors.append(_legal_factor(state, s))
        else:
            factors.append(_script_factor(table, s))
    return slots, factors


def count_actions(state: GameState, player: int, spec: AbstractionSpec) -> int:
    _, factors = action_factors(state, player, spec)
    n = 1
    for f in factors:
        n *= len(f)
    return n


def enumerate_actions(state: GameState, player: int, spec: AbstractionSpec) -> Iterator[PlayerAction]:
    """Lazily yield the Cartesian product of per-unit move sets, units by ascending id."""
    slots, factors = action_factors(state, player, spec)
    if len(slots) == 0:
        raise EmptyActionError(f"player {player} has no ready unit at frame {state.frame}")
    units = state.table[slots, kn.ID].tolist()
    for combo in itertools.product(*factors):
        yield PlayerAction.from_codes(units, combo)


# -- unrestricted-unit selection --------------------------------------------

class Strategy(enum.Enum):
    AV_PLUS = "av+"
    AV_MINUS = "av-"
    RANDOM = "random"

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        name = name.strip().lower()
        aliases = {"r": "random", "rand": "random", "avplus": "av+", "avminus": "av-"}
        return cls(aliases.get(name, name))


@dataclass(frozen=True)
class SelectionState:
    strategy: Strategy = Strategy.AV_PLUS
    n: int = 4
    seed: int = 0
    current: frozenset[int] | None = None
    calls: int = field(default=0, compare=False)

    def __post_init__(self):
        if isinstance(self.strategy, str):
            object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        if self.n < 1:
            raise ValueError("unrestricted set size must be positive")


def _av(state: GameState, s: int) -> Fraction:
    row = state.table[s]
    k = state.kind_table[row[kn.KIND]]
    return Fraction(int(k[kn.DMG]), int(k[kn.CD]) + 1) / int(row[kn.HP])


def select_unrestricted(state: GameState, player: int, sel: SelectionState) -> tuple[frozenset[int], SelectionState]:
    """Pick the unrestricted units for this decision point.

    AV+/AV- rank the ready units by ``dpf/hp`` (largest/smallest first) and
    break ties with the seeded generator.  Random keeps the set drawn on its
    first call and refills it from the remaining living units as members die.
    """
    rng = np.random.default_rng([sel.seed, sel.calls])
    nxt = replace(sel, calls=sel.calls + 1)
    if sel.strategy is Strategy.RANDOM:
        living = state.unit_ids(player)
        keep = [u for u in sorted(sel.current or ()) if u in set(living)]
        pool = [u for u in living if u not in keep]
        want = min(sel.n, len(living)) - len(keep)
        if want > 0:
            keep += rng.choice(pool, size=want, replace=False).tolist()
        chosen = frozenset(int(u) for u in keep)
        return chosen, replace(nxt, current=chosen)

    slots = state.ready_slots(player)
    noise = rng.random(len(slots))
    sign = -1 if sel.strategy is Strategy.AV_PLUS else 1
    order = sorted(range(len(slots)), key=lambda j: (sign * _av(state, slots[j]), noise[j]))
    chosen = frozenset(int(state.table[slots[j], kn.ID]) for j in order[: sel.n])
    return chosen, replace(nxt, current=chosen)
