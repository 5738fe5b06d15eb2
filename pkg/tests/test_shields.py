"""Shield transforms, authority ramp, blending, and overrides."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from riskdrive.config import ShieldConfig
from riskdrive.shields import (BlendState, ShieldKind, apply_shield, blend,
                               effort, pure_pursuit_steer, resolve_override,
                               smooth_and_authority)
from riskdrive.world import EgoAction
from tests.conftest import make_observation

unit = st.floats(0, 1)
act = st.floats(-1, 1)


@pytest.fixture
def shields() -> ShieldConfig:
    return ShieldConfig()


# -- authority ramp -------------------------------------------------------

def test_ema_update():
    state = BlendState()
    smooth_and_authority(1.0, state, threshold=0.3)
    assert state.irs_ema == pytest.approx(0.3)    # 0.7*0 + 0.3*1


def test_authority_zero_at_threshold():
    state = BlendState(irs_ema=0.3 / 0.7)          # EMA lands exactly on 0.3
    assert smooth_and_authority(0.0, state, 0.3) == 0.0


def test_authority_linear_ramp_value():
    # EMA stays at 0.65: raw = (0.65 - 0.3) / 0.7 = 0.5.
    state = BlendState(irs_ema=0.65, prev_alpha=0.5)
    assert smooth_and_authority(0.65, state, 0.3) == pytest.approx(0.5)


def test_authority_full_at_ema_one():
    state = BlendState(irs_ema=1.0, prev_alpha=1.0)
    assert smooth_and_authority(1.0, state, 0.3) == pytest.approx(1.0)


def test_authority_rate_cap_both_directions():
    state = BlendState(irs_ema=1.0, prev_alpha=0.0)
    assert smooth_and_authority(1.0, state, 0.3) == pytest.approx(0.1)
    assert smooth_and_authority(1.0, state, 0.3) == pytest.approx(0.2)
    state2 = BlendState(irs_ema=0.0, prev_alpha=0.9)
    assert smooth_and_authority(0.0, state2, 0.3) == pytest.approx(0.8)


def test_authority_gain_scales_ramp():
    state = BlendState(irs_ema=0.65, prev_alpha=0.75, authority_gain=1.5)
    assert smooth_and_authority(0.65, state, 0.3) == pytest.approx(0.75)


@given(st.lists(unit, min_size=1, max_size=50), unit)
def test_authority_invariants(irs_seq, gain):
    state = BlendState(authority_gain=0.5 + gain)
    prev = 0.0
    for irs in irs_seq:
        alpha = smooth_and_authority(irs, state, 0.3)
        assert 0.0 <= alpha <= 1.0
        assert abs(alpha - prev) <= 0.1 + 1e-12
        assert 0.0 <= state.irs_ema <= 1.0
        prev = alpha


# -- shield transforms ----------------------------------------------------

def test_steering_guard_clamps_to_track_band(shields):
    obs = make_observation(speed=3.0)
    out = apply_shield(ShieldKind.STEERING_GUARD, EgoAction(0.9, 0.2),
                       obs, shields, track_steer=0.0)
    assert out == EgoAction(0.3, 0.2)
    out = apply_shield(ShieldKind.STEERING_GUARD, EgoAction(-0.9, 0.2),
                       obs, shields, track_steer=0.0)
    assert out.steer == pytest.approx(-0.3)
    inside = apply_shield(ShieldKind.STEERING_GUARD, EgoAction(0.1, 0.2),
                          obs, shields, track_steer=0.0)
    assert inside == EgoAction(0.1, 0.2)


def test_steering_guard_band_follows_track(shields):
    obs = make_observation(speed=3.0)
    out = apply_shield(ShieldKind.STEERING_GUARD, EgoAction(1.0, 0.0),
                       obs, shields, track_steer=0.5)
    assert out.steer == pytest.approx(0.8)


def test_brake_bias_forces_deceleration(shields):
    obs = make_observation(speed=3.0)
    out = apply_shield(ShieldKind.BRAKE_BIAS, EgoAction(0.2, 0.7),
                       obs, shields, track_steer=0.0)
    assert out == EgoAction(0.2, -0.5)
    out = apply_shield(ShieldKind.BRAKE_BIAS, EgoAction(0.2, -0.9),
                       obs, shields, track_steer=0.0)
    assert out.acc == pytest.approx(-0.9)          # never weakens braking


def test_speed_cap_only_bites_above_cap(shields):
    slow = make_observation(speed=4.0)
    fast = make_observation(speed=6.0)
    a = EgoAction(0.1, 0.8)
    assert apply_shield(ShieldKind.SPEED_CAP, a, slow, shields, 0.0) == a
    capped = apply_shield(ShieldKind.SPEED_CAP, a, fast, shields, 0.0)
    assert capped == EgoAction(0.1, 0.0)


@given(act, act, act, act, unit)
def test_shields_touch_one_channel(s, a, s2, a2, speed):
    shields = ShieldConfig()
    obs = make_observation(speed=10.0 * speed)
    action = EgoAction(s, a)
    guard = apply_shield(ShieldKind.STEERING_GUARD, action, obs, shields, s2)
    assert guard.acc == action.acc
    brake = apply_shield(ShieldKind.BRAKE_BIAS, action, obs, shields, s2)
    assert brake.steer == action.steer
    cap = apply_shield(ShieldKind.SPEED_CAP, action, obs, shields, s2)
    assert cap.steer == action.steer


# -- blending and override ------------------------------------------------

def test_blend_worked_example():
    out = blend(EgoAction(0.4, -1.0), EgoAction(-0.2, -0.4), alpha=0.5)
    assert out.steer == pytest.approx(0.1)
    assert out.acc == pytest.approx(-0.7)


def test_blend_endpoints():
    a, b = EgoAction(0.4, -1.0), EgoAction(-0.2, -0.4)
    assert blend(a, b, 0.0) == a
    assert blend(a, b, 1.0) == b


@given(act, act, act, act, unit)
def test_blend_is_convex(s1, a1, s2, a2, alpha):
    a, b = EgoAction(s1, a1), EgoAction(s2, a2)
    out = blend(a, b, alpha)
    assert min(a.steer, b.steer) - 1e-12 <= out.steer <= max(a.steer, b.steer) + 1e-12
    assert min(a.acc, b.acc) - 1e-12 <= out.acc <= max(a.acc, b.acc) + 1e-12


def test_override_wins_verbatim():
    human = EgoAction(-0.9, 1.0)
    u, took = resolve_override(EgoAction(0.0, 0.0), human)
    assert took and u == human
    u, took = resolve_override(EgoAction(0.2, 0.3), None)
    assert not took and u == EgoAction(0.2, 0.3)


def test_effort_is_euclidean():
    assert effort(EgoAction(0.0, 0.0), EgoAction(0.3, -0.4)) == pytest.approx(0.5)
    assert effort(EgoAction(0.1, 0.1), EgoAction(0.1, 0.1)) == 0.0


# -- pure pursuit ---------------------------------------------------------

def test_pure_pursuit_centered_is_straight(straight_world):
    straight_world.ego.speed = 5.0
    assert pure_pursuit_steer(straight_world) == pytest.approx(0.0, abs=1e-9)


def test_pure_pursuit_steers_back_toward_lane(straight_world):
    straight_world.ego.y = 1.5       # displaced left, heading still along +x
    straight_world.ego.speed = 5.0
    assert pure_pursuit_steer(straight_world) < -0.01   # steer right
    straight_world.ego.y = -1.5
    assert pure_pursuit_steer(straight_world) > 0.01
