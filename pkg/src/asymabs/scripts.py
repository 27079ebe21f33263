"""Scripted unit policies (NOKAV, Kiter) and portfolios of them.

Both scripts keep a *damage ledger*: damage already committed to each target
by friendly units earlier in the same action.  A target whose hit points the
ledger already covers is never chosen again (no overkill).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from asymabs import _kernels as kn
from asymabs.engine import GameState, Move, PlayerAction, _ready_slot


@dataclass(frozen=True)
class Script:
    """A unit policy ``(state, unit id, ledger) -> Move``.

    ``kernel`` identifies the compiled policy used by the search inner loops.
    """

    name: str
    kernel: int
    policy: Callable[..., Move] = field(compare=False, repr=False)

    def __call__(self, state: GameState, uid: int, ledger: Mapping[int, int] | None = None) -> Move:
        return self.policy(state, uid, ledger)


def _ledger_array(state: GameState, ledger: Mapping[int, int] | None) -> np.ndarray:
    led = np.zeros(len(state.table), dtype=np.int64)
    if ledger:
        for uid, dmg in ledger.items():
            s = state.slot(uid)
            if s >= 0:
                led[s] += dmg
    return led


def _run(kernel: int, state: GameState, uid: int, ledger: Mapping[int, int] | None) -> Move:
    s = _ready_slot(state, uid)
    led = _ledger_array(state, ledger)
    code = kn.script_code(kernel, state.table, state.kind_table, state.frame, *state.arena, s, led)
    return Move.from_code(code)


def nokav(state: GameState, uid: int, ledger: Mapping[int, int] | None = None) -> Move:
    """No-overkill attack-value script.

    Attacks the in-range enemy with the highest ``dpf/hp`` (ties: lowest id)
    among those the ledger has not already finished off, provided the weapon
    is off cooldown.  Otherwise steps toward the closest enemy still standing
    (U, D, L, R tie order), or waits if no step gets closer.
    """
    return _run(kn.SCRIPT_NOKAV, state, uid, ledger)


def kiter(state: GameState, uid: int, ledger: Mapping[int, int] | None = None) -> Move:
    """Attack when the weapon is ready, back away from the closest enemy while it reloads."""
    return _run(kn.SCRIPT_KITER, state, uid, ledger)


NOKAV = Script("nokav", kn.SCRIPT_NOKAV, nokav)
KITER = Script("kiter", kn.SCRIPT_KITER, kiter)
SCRIPTS = {s.name: s for s in (NOKAV, KITER)}


class Portfolio(tuple):
    """Nonempty ordered collection of scripts with unique names."""

    def __new__(cls, scripts: Iterable[Script] = (NOKAV, KITER)):
        scripts = tuple(scripts)
        if not scripts:
            raise ValueError("portfolio must contain at least one script")
        names = [s.name for s in scripts]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate script names in {names}")
        return super().__new__(cls, scripts)

    @classmethod
    def from_names(cls, names: str | Sequence[str]) -> "Portfolio":
        if isinstance(names, str):
            names = [n.strip() for n in names.split(",") if n.strip()]
        try:
            return cls(SCRIPTS[n.lower()] for n in names)
        except KeyError as exc:
            raise ValueError(f"unknown script {exc.args[0]!r}; known: {sorted(SCRIPTS)}") from None

    @property
    def names(self) -> list[str]:
        return [s.name for s in self]

    def __repr__(self):
        return f"Portfolio({self.names})"


DEFAULT_PORTFOLIO = Portfolio()


def script_codes(state: GameState, player: int, script: Script) -> np.ndarray:
    """Per-slot codes of ``script`` applied to every ready unit of ``player`` (-1 elsewhere)."""
    return kn.script_codes(script.kernel, state.table, state.kind_table, state.frame, *state.arena, player)


def script_action(state: GameState, player: int, script: Script) -> PlayerAction:
    """Full action from one script, units filled in id order with a shared ledger."""
    slots = state.ready_slots(player)
    codes = script_codes(state, player, script)
    return PlayerAction.from_codes(state.table[slots, kn.ID], codes[slots])
