import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asymabs import _kernels as kn
from asymabs.engine import (ATTACK_FRAMES, DOWN, EMPTY_ACTION, LEFT, RIGHT, UNIT_KINDS, UP, WAIT, WAIT_FRAMES,
                            GameState, IllegalActionError, Move, PlayerAction, PreconditionError, Unit, UnitKind,
                            apply, dpf, is_terminal, legal_moves, load_unit_kinds, ltd2, ready_units, winner)
from helpers import DRAGOON, MARINE, ZEALOT, random_action, random_state, random_trajectory, state_of

seeds = st.integers(0, 2**31 - 1)


def test_bundled_stat_table():
    assert set(UNIT_KINDS) == {"Zealot", "Dragoon", "Zergling", "Marine"}
    z, d = UNIT_KINDS["Zealot"], UNIT_KINDS["Dragoon"]
    assert (z.hp0, z.damage, z.cooldown, z.range, z.speed) == (160, 16, 22, 0, 4)
    assert (d.hp0, d.damage, d.cooldown, d.range, d.speed) == (180, 20, 30, 128, 4)
    assert max(k.width for k in UNIT_KINDS.values()) <= 40
    assert max(k.height for k in UNIT_KINDS.values()) <= 50


def test_custom_stat_table(tmp_path):
    p = tmp_path / "kinds.cfg"
    p.write_text("[Probe]\ncode = pb\nhp0 = 20\ndamage = 5\nrange = 0\ncooldown = 0\nspeed = 2\nwidth = 10\nheight = 10\n")
    kinds = load_unit_kinds(p)
    assert kinds["Probe"].dpf == 5


def test_unit_kind_validation():
    with pytest.raises(ValueError):
        UnitKind("bad", 0, 1, 0, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        UnitKind("bad", 10, -1, 0, 1, 1, 1, 1)


class TestDpf:
    def test_zealot(self):
        assert dpf(ZEALOT) == Fraction(16, 23)
        assert float(dpf(ZEALOT)) == pytest.approx(0.69565, abs=1e-5)

    def test_zero_damage(self):
        assert UnitKind("x", 10, 0, 0, 5, 1, 1, 1).dpf == 0

    def test_zero_cooldown(self):
        assert UnitKind("x", 10, 6, 0, 0, 1, 1, 1).dpf == 6


class TestLtd2:
    def test_single_unit(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 100, hp=25), Unit(1, 1, ZEALOT, 200, 100))
        s = GameState.from_units([s.unit(0)], arena=s.arena)
        assert ltd2(s, 0) == pytest.approx(5 * 16 / 23)
        assert ltd2(s, 0) == pytest.approx(3.478, abs=1e-3)

    def test_identical_armies(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 100), Unit(1, 1, ZEALOT, 200, 100))
        assert ltd2(s, 0) == 0.0

    def test_two_versus_one(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 100), Unit(1, 0, ZEALOT, 100, 150), Unit(2, 1, ZEALOT, 200, 100))
        assert ltd2(s, 0) == pytest.approx(math.sqrt(160) * 16 / 23)

    @given(seeds)
    def test_zero_sum(self, seed):
        s = random_state(seed)
        assert abs(ltd2(s, 0) + ltd2(s, 1)) < 1e-12


class TestLegalMoves:
    def test_center_no_enemy_near(self):
        s = state_of(Unit(0, 0, ZEALOT, 160, 120), Unit(1, 1, ZEALOT, 20, 20), arena=(320, 240))
        assert set(legal_moves(s, 0)) == {UP, DOWN, LEFT, RIGHT, WAIT}

    def test_left_wall(self):
        s = state_of(Unit(0, 0, ZEALOT, 12, 120), Unit(1, 1, ZEALOT, 300, 20))
        ms = legal_moves(s, 0)
        assert LEFT not in ms and RIGHT in ms and WAIT in ms

    def test_ranged_target_in_range(self):
        s = state_of(Unit(0, 0, DRAGOON, 100, 120), Unit(7, 1, MARINE, 200, 120))
        assert Move.attack(7) in legal_moves(s, 0)
        far = state_of(Unit(0, 0, DRAGOON, 40, 120), Unit(7, 1, MARINE, 290, 120))
        assert Move.attack(7) not in legal_moves(far, 0)

    def test_ranged_reach_uses_target_half_extent(self):
        # reach = 128 + max(16, 20) / 2 = 138
        on = state_of(Unit(0, 0, DRAGOON, 30, 120), Unit(1, 1, MARINE, 168, 120))
        off = state_of(Unit(0, 0, DRAGOON, 30, 120), Unit(1, 1, MARINE, 169, 120))
        assert Move.attack(1) in legal_moves(on, 0)
        assert Move.attack(1) not in legal_moves(off, 0)

    def test_melee_box_gap(self):
        # zealot boxes 24 wide: centers 32 apart leave an 8 px gap
        on = state_of(Unit(0, 0, ZEALOT, 100, 120), Unit(1, 1, ZEALOT, 132, 120))
        off = state_of(Unit(0, 0, ZEALOT, 100, 120), Unit(1, 1, ZEALOT, 133, 120))
        assert Move.attack(1) in legal_moves(on, 0)
        assert Move.attack(1) not in legal_moves(off, 0)

    def test_no_attack_on_cooldown(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120, cooldown_frame=5), Unit(1, 1, ZEALOT, 120, 120))
        assert all(m.kind != 5 for m in legal_moves(s, 0))

    def test_dead_or_busy_unit(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120, ready_frame=3), Unit(1, 1, ZEALOT, 200, 120))
        with pytest.raises(PreconditionError):
            legal_moves(s, 0)
        with pytest.raises(PreconditionError):
            legal_moves(s, 99)

    @given(seeds)
    def test_never_empty_and_wait_legal(self, seed):
        s = random_state(seed)
        for u in ready_units(s, 0) + ready_units(s, 1):
            assert WAIT in legal_moves(s, u)


class TestReadyUnits:
    def test_fresh_state_all_ready(self):
        s = random_state(3, busy=False)
        assert ready_units(s, 0) == s.unit_ids(0)

    def test_all_busy_after_moves(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120), Unit(1, 0, ZEALOT, 100, 60), Unit(2, 1, DRAGOON, 250, 120))
        a0 = PlayerAction.from_pairs([(0, UP), (1, DOWN)])
        # dragoon attacks: busy for 5 frames, zealots only 4
        s1 = apply(s, a0, PlayerAction.from_pairs([(2, WAIT)]))
        assert s1.frame == 4 and ready_units(s1, 0) == [0, 1]
        s2 = apply(s1, PlayerAction.from_pairs([(0, WAIT), (1, WAIT)]), PlayerAction.from_pairs([(2, WAIT)]))
        assert s2.frame == 8

    def test_mixed_timers(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120, ready_frame=2), Unit(1, 0, ZEALOT, 100, 60, ready_frame=6),
                     Unit(2, 0, ZEALOT, 60, 60), Unit(3, 1, ZEALOT, 250, 120, ready_frame=9), frame=2)
        assert ready_units(s, 0) == [0, 2]
        assert ready_units(s, 1) == []


class TestApply:
    def test_all_wait(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120), Unit(1, 1, ZEALOT, 250, 120))
        s1 = apply(s, PlayerAction.from_pairs([(0, WAIT)]), PlayerAction.from_pairs([(1, WAIT)]))
        assert s1.frame == s.frame + WAIT_FRAMES
        assert [(u.x, u.y, u.hp) for u in s1.units] == [(u.x, u.y, u.hp) for u in s.units]

    def test_mutual_kill(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120, hp=10), Unit(1, 1, ZEALOT, 120, 120, hp=16))
        s1 = apply(s, PlayerAction.from_pairs([(0, Move.attack(1))]), PlayerAction.from_pairs([(1, Move.attack(0))]))
        assert s1.alive(0) == s1.alive(1) == 0
        assert s1.terminal and winner(s1) is None

    def test_damage_and_cooldown(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120), Unit(1, 1, MARINE, 120, 120), frame=10)
        s1 = apply(s, PlayerAction.from_pairs([(0, Move.attack(1))]), PlayerAction.from_pairs([(1, WAIT)]))
        assert s1.unit(1).hp == 24
        assert s1.unit(0).cooldown_frame == 10 + 22
        assert s1.unit(0).ready_frame == 10 + ATTACK_FRAMES

    def test_displacement(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120), Unit(1, 1, MARINE, 250, 120))
        s1 = apply(s, PlayerAction.from_pairs([(0, RIGHT)]), PlayerAction.from_pairs([(1, UP)]))
        assert (s1.unit(0).x, s1.unit(0).y) == (116, 120)
        assert (s1.unit(1).x, s1.unit(1).y) == (250, 108)

    def test_illegal_move_names_unit(self):
        s = state_of(Unit(0, 0, ZEALOT, 12, 120), Unit(4, 1, ZEALOT, 250, 120))
        with pytest.raises(IllegalActionError) as ei:
            apply(s, PlayerAction.from_pairs([(0, WAIT)]), PlayerAction.from_pairs([(4, Move.attack(0))]))
        assert ei.value.unit_id == 4
        with pytest.raises(IllegalActionError) as ei:
            apply(s, PlayerAction.from_pairs([(0, LEFT)]), PlayerAction.from_pairs([(4, WAIT)]))
        assert ei.value.unit_id == 0

    def test_missing_ready_unit_rejected(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120), Unit(1, 1, ZEALOT, 250, 120))
        with pytest.raises(IllegalActionError):
            apply(s, EMPTY_ACTION, PlayerAction.from_pairs([(1, WAIT)]))

    @given(seeds)
    def test_determinism_clone(self, seed):
        s = random_state(seed)
        rng = np.random.default_rng(seed)
        a, b = random_action(s, 0, rng), random_action(s, 1, rng)
        assert apply(s.clone(), a, b) == apply(s, a, b)

    @given(seeds)
    def test_trajectory_invariants(self, seed):
        traj = random_trajectory(seed, steps=20)
        dead = set()
        for prev, nxt in zip(traj, traj[1:]):
            assert nxt.frame > prev.frame
            assert (nxt.table[:, kn.HP] > 0).all()
            ids = set(nxt.unit_ids())
            assert not (ids & dead)
            dead |= set(prev.unit_ids()) - ids
            if not nxt.terminal:
                assert len(nxt.ready_slots(0)) + len(nxt.ready_slots(1)) > 0

    def test_terminal_refused(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120))
        with pytest.raises(Exception):
            apply(s, PlayerAction.from_pairs([(0, WAIT)]), EMPTY_ACTION)


class TestTerminal:
    def test_both_alive(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120), Unit(1, 1, ZEALOT, 250, 120))
        assert is_terminal(s) == (False, None)

    def test_enemy_eliminated(self):
        s = state_of(Unit(0, 0, ZEALOT, 100, 120))
        done, u = is_terminal(s, 0)
        assert done and u > 0
        assert is_terminal(s, 1)[1] == -u

    def test_mirror_at_cap(self):
        s = state_of(Unit(0, 0, ZEALOT, 200, 120), Unit(1, 1, ZEALOT, 120, 120), frame=3000)
        assert is_terminal(s) == (True, 0.0)
        assert s.mirrored() == state_of(Unit(0, 1, ZEALOT, 120, 120), Unit(1, 0, ZEALOT, 200, 120), frame=3000)


def test_clock_capped():
    s = state_of(Unit(0, 0, ZEALOT, 100, 120), Unit(1, 1, ZEALOT, 250, 120), frame=2998, frame_cap=3000)
    s1 = apply(s, PlayerAction.from_pairs([(0, WAIT)]), PlayerAction.from_pairs([(1, WAIT)]))
    assert s1.frame == 3000 and s1.terminal


def test_dict_roundtrip():
    s = random_state(11)
    assert GameState.from_dict(s.to_dict()) == s
    assert hash(GameState.from_dict(s.to_dict())) == hash(s)
