"""Deterministic forward model of a two-player unit combat.

Players are ``0`` (the searching player, *i*) and ``1`` (the opponent).  A
:class:`GameState` is an immutable snapshot; :func:`apply` commits one
:class:`PlayerAction` per player simultaneously and jumps the clock to the
next decision point.
"""

from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from asymabs import _kernels as kn

PLAYERS = (0, 1)
DEFAULT_ARENA = (1280, 780)
DEFAULT_FRAME_CAP = 3000

MOVE_FRAMES = kn.MOVE_FRAMES
WAIT_FRAMES = kn.WAIT_FRAMES
ATTACK_FRAMES = kn.ATTACK_FRAMES


def opponent(player: int) -> int:
    return 1 - player


class EngineError(ValueError):
    pass


class PreconditionError(EngineError):
    """A unit was queried that is unknown, dead, or busy."""


class IllegalActionError(EngineError):
    def __init__(self, unit_id: int, reason: str):
        super().__init__(f"unit {unit_id}: {reason}")
        self.unit_id = unit_id


@dataclass(frozen=True)
class UnitKind:
    name: str
    hp0: int
    damage: int
    range: int
    cooldown: int
    speed: int
    width: int
    height: int
    code: str = ""

    def __post_init__(self):
        if self.hp0 < 1:
            raise ValueError(f"{self.name}: hp0 must be >= 1")
        if self.speed < 1:
            raise ValueError(f"{self.name}: speed must be >= 1")
        for field in ("damage", "range", "cooldown", "width", "height"):
            if getattr(self, field) < 0:
                raise ValueError(f"{self.name}: {field} must be >= 0")

    @property
    def melee(self) -> bool:
        return self.range == 0

    @property
    def dpf(self) -> Fraction:
        return Fraction(self.damage, self.cooldown + 1)

    def row(self) -> list[int]:
        return [self.hp0, self.damage, self.range, self.cooldown, self.speed, self.width, self.height]


def load_unit_kinds(path: str | Path | None = None) -> dict[str, UnitKind]:
    """Read a stat table (INI, one section per kind). Defaults to the bundled table."""
    parser = configparser.ConfigParser()
    if path is None:
        parser.read_string(resources.files("asymabs.data").joinpath("units.cfg").read_text())
    else:
        with open(path) as fh:
            parser.read_file(fh)
    kinds = {}
    for name in parser.sections():
        sec = parser[name]
        kinds[name] = UnitKind(
            name=name,
            hp0=sec.getint("hp0"),
            damage=sec.getint("damage"),
            range=sec.getint("range"),
            cooldown=sec.getint("cooldown"),
            speed=sec.getint("speed"),
            width=sec.getint("width"),
            height=sec.getint("height"),
            code=sec.get("code", name[:2].lower()),
        )
    return kinds


UNIT_KINDS = load_unit_kinds()


class MoveKind(enum.IntEnum):
    UP = kn.UP
    DOWN = kn.DOWN
    LEFT = kn.LEFT
    RIGHT = kn.RIGHT
    WAIT = kn.WAIT
    ATTACK = kn.ATTACK


class Move(NamedTuple):
    kind: MoveKind
    target: int = -1

    @property
    def code(self) -> int:
        if self.kind == MoveKind.ATTACK:
            return kn.ATTACK + self.target
        return int(self.kind)

    @classmethod
    def attack(cls, target: int) -> "Move":
        return cls(MoveKind.ATTACK, int(target))

    @classmethod
    def from_code(cls, code: int) -> "Move":
        code = int(code)
        if code < 0:
            raise ValueError(f"no move for code {code}")
        if code >= kn.ATTACK:
            return cls(MoveKind.ATTACK, code - kn.ATTACK)
        return _SIMPLE[code]

    def __repr__(self):
        if self.kind == MoveKind.ATTACK:
            return f"A({self.target})"
        return "UDLRW"[self.kind]


UP = Move(MoveKind.UP)
DOWN = Move(MoveKind.DOWN)
LEFT = Move(MoveKind.LEFT)
RIGHT = Move(MoveKind.RIGHT)
WAIT = Move(MoveKind.WAIT)
_SIMPLE = (UP, DOWN, LEFT, RIGHT, WAIT)


@dataclass(frozen=True)
class PlayerAction:
    """One move per ready unit of a player, in ascending unit-id order.

    ``a[k]`` is the move of the k-th ready unit (0-based); ``a.of(uid)`` is
    the move of unit ``uid``.
    """

    units: tuple[int, ...] = ()
    moves: tuple[Move, ...] = ()

    def __post_init__(self):
        if len(self.units) != len(self.moves):
            raise ValueError("units and moves differ in length")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, Move]]) -> "PlayerAction":
        items = sorted(pairs)
        return cls(tuple(u for u, _ in items), tuple(m for _, m in items))

    @classmethod
    def from_codes(cls, units: Sequence[int], codes: Sequence[int]) -> "PlayerAction":
        return cls(tuple(int(u) for u in units), tuple(Move.from_code(c) for c in codes))

    def __len__(self):
        return len(self.units)

    def __getitem__(self, k: int) -> Move:
        return self.moves[k]

    def __iter__(self) -> Iterator[tuple[int, Move]]:
        return iter(zip(self.units, self.moves))

    def of(self, uid: int) -> Move:
        try:
            return self.moves[self.units.index(uid)]
        except ValueError:
            raise KeyError(uid) from None

    def replace(self, k: int, move: Move) -> "PlayerAction":
        moves = list(self.moves)
        moves[k] = move
        return PlayerAction(self.units, tuple(moves))

    def codes(self) -> list[int]:
        return [m.code for m in self.moves]

    def __repr__(self):
        return "(" + ", ".join(f"{u}:{m!r}" for u, m in self) + ")"


EMPTY_ACTION = PlayerAction()


@dataclass(frozen=True)
class Unit:
    id: int
    owner: int
    kind: UnitKind
    x: int
    y: int
    hp: int = -1
    ready_frame: int = 0
    cooldown_frame: int = 0

    def __post_init__(self):
        if self.hp == -1:
            object.__setattr__(self, "hp", self.kind.hp0)
        if not 0 <= self.hp <= self.kind.hp0:
            raise ValueError(f"unit {self.id}: hp {self.hp} outside [0, {self.kind.hp0}]")
        if self.owner not in PLAYERS:
            raise ValueError(f"unit {self.id}: owner must be 0 or 1")


def dpf(unit: Unit | UnitKind) -> Fraction:
    """Damage per frame, ``d / (cd + 1)``."""
    kind = unit.kind if isinstance(unit, Unit) else unit
    return kind.dpf


class GameState:
    """Immutable combat snapshot backed by a packed unit table."""

    __slots__ = ("table", "kind_table", "kinds", "frame", "arena", "frame_cap", "_ready", "_hash")

    def __init__(self, table, kinds, frame=0, arena=DEFAULT_ARENA, frame_cap=DEFAULT_FRAME_CAP, kind_table=None):
        table = np.ascontiguousarray(table, dtype=np.int64).reshape(-1, kn.N_UCOLS)
        table.flags.writeable = False
        self.table = table
        self.kinds = tuple(kinds)
        if kind_table is None:
            kind_table = np.array([k.row() for k in self.kinds], dtype=np.int64).reshape(-1, kn.N_KCOLS)
            kind_table.flags.writeable = False
        self.kind_table = kind_table
        self.frame = int(frame)
        self.arena = (int(arena[0]), int(arena[1]))
        self.frame_cap = int(frame_cap)
        self._ready = None
        self._hash = None

    @classmethod
    def from_units(cls, units: Iterable[Unit], arena=DEFAULT_ARENA, frame=0, frame_cap=DEFAULT_FRAME_CAP):
        units = sorted((u for u in units if u.hp > 0), key=lambda u: u.id)
        kinds: list[UnitKind] = []
        for u in units:
            if u.kind not in kinds:
                kinds.append(u.kind)
        ids = [u.id for u in units]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate unit ids")
        rows = [
            [u.id, u.owner, kinds.index(u.kind), u.x, u.y, u.hp, u.ready_frame, u.cooldown_frame]
            for u in units
        ]
        state = cls(np.array(rows, dtype=np.int64).reshape(-1, kn.N_UCOLS), kinds, frame, arena, frame_cap)
        for u in units:
            if not _inside(u, state.arena):
                raise ValueError(f"unit {u.id} lies outside the arena")
        return state

    def _successor(self, table, frame) -> "GameState":
        return GameState(table, self.kinds, frame, self.arena, self.frame_cap, self.kind_table)

    def with_frame_cap(self, frame_cap: int) -> "GameState":
        return GameState(self.table, self.kinds, self.frame, self.arena, frame_cap, self.kind_table)

    # -- views -----------------------------------------------------------
    @property
    def units(self) -> tuple[Unit, ...]:
        return tuple(self._unit_at(s) for s in range(len(self.table)))

    def _unit_at(self, s: int) -> Unit:
        r = self.table[s]
        return Unit(
            id=int(r[kn.ID]), owner=int(r[kn.OWNER]), kind=self.kinds[r[kn.KIND]],
            x=int(r[kn.X]), y=int(r[kn.Y]), hp=int(r[kn.HP]),
            ready_frame=int(r[kn.READY]), cooldown_frame=int(r[kn.CDF]),
        )

    def unit(self, uid: int) -> Unit:
        s = self.slot(uid)
        if s < 0:
            raise KeyError(uid)
        return self._unit_at(s)

    def slot(self, uid: int) -> int:
        return kn.slot_of(self.table, uid)

    def unit_ids(self, player: int | None = None) -> list[int]:
        t = self.table
        if player is None:
            return t[:, kn.ID].tolist()
        return t[t[:, kn.OWNER] == player, kn.ID].tolist()

    def ready_slots(self, player: int) -> np.ndarray:
        if self._ready is None:
            t = self.table
            ready = t[:, kn.READY] <= self.frame
            self._ready = (
                np.flatnonzero(ready & (t[:, kn.OWNER] == 0)),
                np.flatnonzero(ready & (t[:, kn.OWNER] == 1)),
            )
        return self._ready[player]

    def alive(self, player: int) -> int:
        return int(np.count_nonzero(self.table[:, kn.OWNER] == player))

    @property
    def terminal(self) -> bool:
        return bool(kn.terminal(self.table, self.frame, self.frame_cap))

    # -- value semantics ---------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, GameState):
            return NotImplemented
        return (
            self.frame == other.frame
            and self.arena == other.arena
            and self.frame_cap == other.frame_cap
            and self.kinds == other.kinds
            and np.array_equal(self.table, other.table)
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.frame, self.arena, self.frame_cap, self.kinds, self.table.tobytes()))
        return self._hash

    def clone(self) -> "GameState":
        return GameState(self.table.copy(), self.kinds, self.frame, self.arena, self.frame_cap)

    def mirrored(self) -> "GameState":
        """Swap owners and reflect x across the vertical center line."""
        t = self.table.copy()
        t[:, kn.OWNER] = 1 - t[:, kn.OWNER]
        t[:, kn.X] = self.arena[0] - t[:, kn.X]
        return GameState(t, self.kinds, self.frame, self.arena, self.frame_cap)

    def to_dict(self) -> dict:
        return {
            "frame": self.frame,
            "frame_cap": self.frame_cap,
            "arena": list(self.arena),
            "kinds": [vars(k) for k in self.kinds],
            "units": self.table.tolist(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "GameState":
        kinds = [UnitKind(**k) for k in d["kinds"]]
        return cls(np.array(d["units"], dtype=np.int64), kinds, d["frame"], tuple(d["arena"]), d["frame_cap"])

    def __repr__(self):
        return f"GameState(frame={self.frame}, units={len(self.table)}, p0={self.alive(0)}, p1={self.alive(1)})"


def _inside(u: Unit, arena) -> bool:
    w, h = u.kind.width, u.kind.height
    return 2 * u.x - w >= 0 and 2 * u.x + w <= 2 * arena[0] and 2 * u.y - h >= 0 and 2 * u.y + h <= 2 * arena[1]


def _ready_slot(state: GameState, uid: int) -> int:
    s = state.slot(uid)
    if s < 0:
        raise PreconditionError(f"unit {uid} is not alive in this state")
    if state.table[s, kn.READY] > state.frame:
        raise PreconditionError(f"unit {uid} is busy until frame {state.table[s, kn.READY]}")
    return s


def legal_moves(state: GameState, uid: int) -> tuple[Move, ...]:
    """Legal moves of a ready unit, canonical order U, D, L, R, W, attacks by target id."""
    s = _ready_slot(state, uid)
    codes = kn.legal_codes(state.table, state.kind_table, state.frame, *state.arena, s)
    return tuple(Move.from_code(c) for c in codes)


def ready_units(state: GameState, player: int) -> list[int]:
    return state.table[state.ready_slots(player), kn.ID].tolist()


def joint_codes(state: GameState, a0: PlayerAction, a1: PlayerAction, check: bool = True) -> np.ndarray:
    """Per-slot move codes for a joint action, validated against ``state``."""
    t = state.table
    codes = np.full(len(t), kn.NO_MOVE, dtype=np.int64)
    for player, action in ((0, a0), (1, a1)):
        ready = t[state.ready_slots(player), kn.ID]
        if check and tuple(ready.tolist()) != action.units:
            missing = set(ready.tolist()) ^ set(action.units)
            uid = min(missing) if missing else (action.units[0] if action.units else -1)
            raise IllegalActionError(uid, f"player {player} must move exactly its ready units {ready.tolist()}")
        for uid, move in action:
            s = state.slot(uid)
            c = move.code
            if check and not kn.is_legal(t, state.kind_table, state.frame, state.arena[0], state.arena[1], s, c):
                raise IllegalActionError(uid, f"move {move!r} is not legal")
            codes[s] = c
    return codes


def apply(state: GameState, a_i: PlayerAction, a_neg_i: PlayerAction) -> GameState:
    """Simultaneous transition: player 0 plays ``a_i``, player 1 plays ``a_neg_i``."""
    if state.terminal:
        raise EngineError("cannot apply actions to a terminal state")
    codes = joint_codes(state, a_i, a_neg_i)
    return step_codes(state, codes)


def step_codes(state: GameState, codes: np.ndarray) -> GameState:
    """Unchecked transition from a per-slot code array."""
    table, frame = kn.step(state.table, state.kind_table, state.frame, state.frame_cap, codes)
    return state._successor(table, frame)


def ltd2(state: GameState, player: int = 0) -> float:
    return float(kn.ltd2(state.table, state.kind_table, player))


def is_terminal(state: GameState, player: int = 0) -> tuple[bool, float | None]:
    if not state.terminal:
        return False, None
    return True, ltd2(state, player)


def winner(state: GameState, tol: float = 1e-9) -> int | None:
    """Winning player of a terminal state by LTD2 sign, ``None`` for a draw."""
    v = ltd2(state, 0)
    if abs(v) < tol:
        return None
    return 0 if v > 0 else 1


def unit_value(state: GameState, uid: int) -> float:
    """``sqrt(hp) * dpf`` of one unit, its LTD2 contribution."""
    u = state.unit(uid)
    return math.sqrt(u.hp) * float(u.kind.dpf)


def attack_value(state: GameState, uid: int) -> float:
    """``dpf / hp`` using current hit points."""
    u = state.unit(uid)
    return float(u.kind.dpf) / u.hp
