"""Shared builders for the test suite."""

import numpy as np

from asymabs.engine import UNIT_KINDS, GameState, PlayerAction, Unit, legal_moves, ready_units

ZEALOT = UNIT_KINDS["Zealot"]
DRAGOON = UNIT_KINDS["Dragoon"]
ZERGLING = UNIT_KINDS["Zergling"]
MARINE = UNIT_KINDS["Marine"]
KINDS = (ZEALOT, DRAGOON, ZERGLING, MARINE)


def state_of(*units, arena=(320, 240), frame=0, frame_cap=3000):
    return GameState.from_units(units, arena=arena, frame=frame, frame_cap=frame_cap)


def random_state(seed, max_per_side=4, arena=(320, 240), busy=True, frame_cap=3000):
    """Random in-bounds state with some wounded and some busy units."""
    rng = np.random.default_rng(seed)
    units = []
    uid = 0
    for owner in (0, 1):
        for _ in range(int(rng.integers(1, max_per_side + 1))):
            k = KINDS[rng.integers(len(KINDS))]
            x = int(rng.integers((k.width + 1) // 2, arena[0] - (k.width + 1) // 2 + 1))
            y = int(rng.integers((k.height + 1) // 2, arena[1] - (k.height + 1) // 2 + 1))
            hp = int(rng.integers(1, k.hp0 + 1))
            ready = int(rng.integers(0, 4)) if busy and rng.random() < 0.3 else 0
            cdf = int(rng.integers(0, k.cooldown + 1)) if busy and rng.random() < 0.3 else 0
            units.append(Unit(uid, owner, k, x, y, hp, ready, cdf))
            uid += int(rng.integers(1, 3))
    frame = min(u.ready_frame for u in units)
    return GameState.from_units(units, arena=arena, frame=frame, frame_cap=frame_cap)


def random_action(state, player, rng):
    uids = ready_units(state, player)
    moves = []
    for u in uids:
        ms = legal_moves(state, u)
        moves.append(ms[rng.integers(len(ms))])
    return PlayerAction(tuple(uids), tuple(moves))


def random_trajectory(seed, steps=30, **kw):
    """States visited by uniformly random legal play from a random start."""
    from asymabs.engine import apply

    rng = np.random.default_rng(seed + 10_000)
    s = random_state(seed, **kw)
    out = [s]
    for _ in range(steps):
        if s.terminal:
            break
        s = apply(s, random_action(s, 0, rng), random_action(s, 1, rng))
        out.append(s)
    return out
