"""Compiled inner loops of the combat model.

Everything here works on a packed ``int64`` unit table (one row per living
unit, rows sorted by unit id) and a ``int64`` kind table.  The Python layer in
:mod:`asymabs.engine` owns validation; these functions assume legal input.
"""

import math

import numpy as np
from numba import njit

# unit table columns
ID, OWNER, KIND, X, Y, HP, READY, CDF = range(8)
N_UCOLS = 8

# kind table columns
HP0, DMG, RNG, CD, SPD, W, H = range(7)
N_KCOLS = 7

# move codes; attacks are ATTACK + target id
UP, DOWN, LEFT, RIGHT, WAIT, ATTACK = 0, 1, 2, 3, 4, 5
NO_MOVE = -1

MOVE_FRAMES = 4
WAIT_FRAMES = 4
ATTACK_FRAMES = 5
STEP_FRAMES = 4  # displacement = speed * STEP_FRAMES
MELEE_GAP = 8.0

SCRIPT_NOKAV = 0
SCRIPT_KITER = 1

_DX = np.array([0, 0, -1, 1], dtype=np.int64)
_DY = np.array([-1, 1, 0, 0], dtype=np.int64)


@njit(cache=True)
def slot_of(U, uid):
    lo = 0
    hi = U.shape[0] - 1
    while lo <= hi:
        mid = (lo + hi) // 2
        v = U[mid, ID]
        if v == uid:
            return mid
        if v < uid:
            lo = mid + 1
        else:
            hi = mid - 1
    return -1


@njit(cache=True)
def in_range(U, K, a, t):
    ka = U[a, KIND]
    kt = U[t, KIND]
    dx = float(U[a, X] - U[t, X])
    dy = float(U[a, Y] - U[t, Y])
    r = K[ka, RNG]
    if r == 0:
        gx = abs(dx) - 0.5 * (K[ka, W] + K[kt, W])
        gy = abs(dy) - 0.5 * (K[ka, H] + K[kt, H])
        if gx < 0.0:
            gx = 0.0
        if gy < 0.0:
            gy = 0.0
        return gx * gx + gy * gy <= MELEE_GAP * MELEE_GAP
    reach = r + 0.5 * max(K[kt, W], K[kt, H])
    return dx * dx + dy * dy <= reach * reach


@njit(cache=True)
def can_step(U, K, s, direction, aw, ah):
    k = U[s, KIND]
    disp = K[k, SPD] * STEP_FRAMES
    nx = U[s, X] + _DX[direction] * disp
    ny = U[s, Y] + _DY[direction] * disp
    w = K[k, W]
    h = K[k, H]
    return 2 * nx - w >= 0 and 2 * nx + w <= 2 * aw and 2 * ny - h >= 0 and 2 * ny + h <= 2 * ah


@njit(cache=True)
def can_attack(U, K, frame, a, t):
    return U[a, CDF] <= frame and U[a, OWNER] != U[t, OWNER] and in_range(U, K, a, t)


@njit(cache=True)
def is_legal(U, K, frame, aw, ah, s, code):
    if code < 0:
        return False
    if code == WAIT:
        return True
    if code < WAIT:
        return can_step(U, K, s, code, aw, ah)
    t = slot_of(U, code - ATTACK)
    if t < 0:
        return False
    return can_attack(U, K, frame, s, t)


@njit(cache=True)
def legal_codes(U, K, frame, aw, ah, s):
    out = np.empty(5 + U.shape[0], dtype=np.int64)
    n = 0
    for d in range(4):
        if can_step(U, K, s, d, aw, ah):
            out[n] = d
            n += 1
    out[n] = WAIT
    n += 1
    if U[s, CDF] <= frame:
        for t in range(U.shape[0]):
            if U[t, OWNER] != U[s, OWNER] and in_range(U, K, s, t):
                out[n] = ATTACK + U[t, ID]
                n += 1
    return out[:n]


@njit(cache=True)
def step(U, K, frame, cap, codes):
    """Commit all moves simultaneously; return the successor table and frame."""
    n = U.shape[0]
    out = U.copy()
    dmg = np.zeros(n, dtype=np.int64)
    for s in range(n):
        c = codes[s]
        if c < 0:
            continue
        k = U[s, KIND]
        if c < WAIT:
            disp = K[k, SPD] * STEP_FRAMES
            out[s, X] = U[s, X] + _DX[c] * disp
            out[s, Y] = U[s, Y] + _DY[c] * disp
            out[s, READY] = frame + MOVE_FRAMES
        elif c == WAIT:
            out[s, READY] = frame + WAIT_FRAMES
        else:
            t = slot_of(U, c - ATTACK)
            dmg[t] += K[k, DMG]
            out[s, READY] = frame + ATTACK_FRAMES
            out[s, CDF] = frame + K[k, CD]
    alive = 0
    for s in range(n):
        out[s, HP] = U[s, HP] - dmg[s]
        if out[s, HP] > 0:
            alive += 1
    res = np.empty((alive, N_UCOLS), dtype=np.int64)
    j = 0
    nxt = cap
    for s in range(n):
        if out[s, HP] > 0:
            res[j] = out[s]
            if out[s, READY] < nxt:
                nxt = out[s, READY]
            j += 1
    if alive == 0:
        nxt = frame + 1
    return res, min(max(nxt, frame + 1), cap)


@njit(cache=True)
def ltd2(U, K, player):
    v = 0.0
    for s in range(U.shape[0]):
        k = U[s, KIND]
        term = math.sqrt(U[s, HP]) * K[k, DMG] / (K[k, CD] + 1)
        if U[s, OWNER] == player:
            v += term
        else:
            v -= term
    return v


@njit(cache=True)
def terminal(U, frame, cap):
    a = False
    b = False
    for s in range(U.shape[0]):
        if U[s, OWNER] == 0:
            a = True
        else:
            b = True
    return frame >= cap or not (a and b)


@njit(cache=True)
def _dist2(U, a, b):
    dx = U[a, X] - U[b, X]
    dy = U[a, Y] - U[b, Y]
    return dx * dx + dy * dy


@njit(cache=True)
def _closest_enemy(U, s, ledger, require_alive):
    best = -1
    bd = 0
    for t in range(U.shape[0]):
        if U[t, OWNER] == U[s, OWNER]:
            continue
        if require_alive and U[t, HP] - ledger[t] <= 0:
            continue
        d = _dist2(U, s, t)
        if best < 0 or d < bd:
            best = t
            bd = d
    return best


@njit(cache=True)
def _directional(U, K, s, target, aw, ah, away):
    # ties resolve in code order U, D, L, R
    k = U[s, KIND]
    disp = K[k, SPD] * STEP_FRAMES
    cur = _dist2(U, s, target)
    best = WAIT
    bd = cur
    for d in range(4):
        if not can_step(U, K, s, d, aw, ah):
            continue
        dx = U[s, X] + _DX[d] * disp - U[target, X]
        dy = U[s, Y] + _DY[d] * disp - U[target, Y]
        nd = dx * dx + dy * dy
        if away:
            if nd > bd:
                best = d
                bd = nd
        else:
            if nd < bd:
                best = d
                bd = nd
    return best


@njit(cache=True)
def _best_target(U, K, frame, s, ledger):
    """Highest dpf/hp enemy in range that the ledger has not already killed."""
    if U[s, CDF] > frame:
        return -1
    best = -1
    bav = -1.0
    for t in range(U.shape[0]):
        if U[t, OWNER] == U[s, OWNER]:
            continue
        rem = U[t, HP] - ledger[t]
        if rem <= 0:
            continue
        if not in_range(U, K, s, t):
            continue
        kt = U[t, KIND]
        av = K[kt, DMG] / (K[kt, CD] + 1.0) / U[t, HP]
        if av > bav:
            best = t
            bav = av
    return best


@njit(cache=True)
def _toward(U, K, s, ledger, aw, ah):
    t = _closest_enemy(U, s, ledger, True)
    if t < 0:
        t = _closest_enemy(U, s, ledger, False)
    if t < 0:
        return WAIT
    return _directional(U, K, s, t, aw, ah, False)


@njit(cache=True)
def nokav_code(U, K, frame, aw, ah, s, ledger):
    t = _best_target(U, K, frame, s, ledger)
    if t >= 0:
        return ATTACK + U[t, ID]
    return _toward(U, K, s, ledger, aw, ah)


@njit(cache=True)
def kiter_code(U, K, frame, aw, ah, s, ledger):
    t = _best_target(U, K, frame, s, ledger)
    if t >= 0:
        return ATTACK + U[t, ID]
    if U[s, CDF] > frame:
        for e in range(U.shape[0]):
            if U[e, OWNER] != U[s, OWNER] and in_range(U, K, s, e):
                c = _closest_enemy(U, s, ledger, False)
                return _directional(U, K, s, c, aw, ah, True)
    return _toward(U, K, s, ledger, aw, ah)


@njit(cache=True)
def script_code(script, U, K, frame, aw, ah, s, ledger):
    if script == SCRIPT_KITER:
        return kiter_code(U, K, frame, aw, ah, s, ledger)
    return nokav_code(U, K, frame, aw, ah, s, ledger)


@njit(cache=True)
def ledger_from(U, K, codes, owner, skip):
    """Damage already committed by ``owner``'s moves in ``codes``, per target slot."""
    led = np.zeros(U.shape[0], dtype=np.int64)
    for s in range(U.shape[0]):
        if s == skip or U[s, OWNER] != owner:
            continue
        c = codes[s]
        if c >= ATTACK:
            t = slot_of(U, c - ATTACK)
            if t >= 0:
                led[t] += K[U[s, KIND], DMG]
    return led


@njit(cache=True)
def _script_fill(script, U, K, frame, aw, ah, player, codes, led):
    led[:] = 0
    for s in range(U.shape[0]):
        if U[s, OWNER] != player or U[s, READY] > frame:
            continue
        c = script_code(script, U, K, frame, aw, ah, s, led)
        codes[s] = c
        if c >= ATTACK:
            led[slot_of(U, c - ATTACK)] += K[U[s, KIND], DMG]


@njit(cache=True)
def script_into(script, U, K, frame, aw, ah, player, codes):
    """Fill ``codes`` for every ready unit of ``player`` in id order, sharing one ledger."""
    led = np.zeros(U.shape[0], dtype=np.int64)
    _script_fill(script, U, K, frame, aw, ah, player, codes, led)


@njit(cache=True)
def script_codes(script, U, K, frame, aw, ah, player):
    codes = np.full(U.shape[0], NO_MOVE, dtype=np.int64)
    script_into(script, U, K, frame, aw, ah, player, codes)
    return codes


@njit(cache=True)
def script_in_context(script, U, K, frame, aw, ah, s, codes):
    led = ledger_from(U, K, codes, U[s, OWNER], s)
    return script_code(script, U, K, frame, aw, ah, s, led)


@njit(cache=True)
def _step_inplace(U, K, frame, cap, codes, dmg):
    """In-place version of :func:`step` for playouts; returns (living count, frame)."""
    n = U.shape[0]
    dmg[:n] = 0
    for s in range(n):
        c = codes[s]
        if c < 0:
            continue
        k = U[s, KIND]
        if c < WAIT:
            disp = K[k, SPD] * STEP_FRAMES
            U[s, X] += _DX[c] * disp
            U[s, Y] += _DY[c] * disp
            U[s, READY] = frame + MOVE_FRAMES
        elif c == WAIT:
            U[s, READY] = frame + WAIT_FRAMES
        else:
            dmg[slot_of(U, c - ATTACK)] += K[k, DMG]
            U[s, READY] = frame + ATTACK_FRAMES
            U[s, CDF] = frame + K[k, CD]
    j = 0
    nxt = cap
    for s in range(n):
        hp = U[s, HP] - dmg[s]
        if hp > 0:
            if j != s:
                U[j] = U[s]
            U[j, HP] = hp
            if U[j, READY] < nxt:
                nxt = U[j, READY]
            j += 1
    if j == 0:
        nxt = frame + 1
    return j, min(max(nxt, frame + 1), cap)


@njit(cache=True)
def playout(U, K, frame, cap, aw, ah, steps, player):
    W = U.copy()
    n = W.shape[0]
    codes = np.empty(n, dtype=np.int64)
    led = np.empty(n, dtype=np.int64)
    dmg = np.empty(n, dtype=np.int64)
    for _ in range(steps):
        V = W[:n]
        if terminal(V, frame, cap):
            break
        c = codes[:n]
        c[:] = NO_MOVE
        _script_fill(SCRIPT_NOKAV, V, K, frame, aw, ah, 0, c, led[:n])
        _script_fill(SCRIPT_NOKAV, V, K, frame, aw, ah, 1, c, led[:n])
        n, frame = _step_inplace(V, K, frame, cap, c, dmg)
    return ltd2(W[:n], K, player)


@njit(cache=True)
def step_then_playout(U, K, frame, cap, aw, ah, codes, steps, player):
    U2, f2 = step(U, K, frame, cap, codes)
    return playout(U2, K, f2, cap, aw, ah, steps, player)
