"""Bus injection, scan spoofing, schedules, and success bookkeeping."""

import numpy as np
import pytest

from riskdrive.attacks import (AttackState, BurstParams, attack_success,
                               can_inject, lidar_spoof)
from riskdrive.config import (AttackConfig, LidarConfig, RunConfig,
                              ScenarioConfig, VehicleConfig)
from riskdrive.episode import random_policy, run_episode
from riskdrive.world import EgoAction, make_rng, raycast_lidar, reset_episode


def fixed_state(kind, **burst_kwargs) -> AttackState:
    """Schedule starting at t=0 with one pinned burst parameter set."""
    cfg = AttackConfig(kind=kind)
    state = AttackState(cfg=cfg, rng=make_rng(0, "attack"), start_offset_s=0.0)
    state._bursts[0] = BurstParams(index=0, **burst_kwargs)
    return state


# -- schedule -------------------------------------------------------------

def test_burst_schedule_windows():
    cfg = AttackConfig(kind="can", period_s=30.0, duration_s=5.0)
    state = AttackState(cfg=cfg, rng=make_rng(0, "attack"), start_offset_s=2.0)
    assert state.burst_index(1.9) is None
    assert state.burst_index(2.0) == 0
    assert state.burst_index(6.9) == 0
    assert state.burst_index(7.1) is None
    assert state.burst_index(32.5) == 1
    assert state.burst_window(1) == (32.0, 37.0)


def test_no_attack_has_no_bursts():
    state = AttackState.for_episode(AttackConfig(kind="none"),
                                    make_rng(0, "attack"))
    assert state.burst_index(100.0) is None
    assert state.start_offset_s == 0.0


def test_offset_is_uniform_within_period():
    offs = [AttackState.for_episode(AttackConfig(kind="lidar", period_s=30.0),
                                    make_rng(s, "attack")).start_offset_s
            for s in range(200)]
    assert 0.0 <= min(offs) and max(offs) < 30.0
    assert np.std(offs) > 5.0


def test_burst_params_drawn_once_and_bounded():
    cfg = AttackConfig(kind="can", can_magnitude=0.5)
    state = AttackState.for_episode(cfg, make_rng(3, "attack"))
    p1 = state.params_for(0)
    p2 = state.params_for(0)
    assert p1 is p2
    assert 0.25 <= p1.magnitude <= 0.5
    assert p1.channel in ("steer", "acc") and p1.sign in (-1.0, 1.0)


# -- bus injection --------------------------------------------------------

def test_can_inject_biases_one_channel():
    state = fixed_state("can", channel="steer", sign=1.0, magnitude=0.4)
    out = can_inject(EgoAction(0.2, -0.3), 1.0, state)
    assert out.steer == pytest.approx(0.6)
    assert out.acc == pytest.approx(-0.3)


def test_can_inject_saturates():
    state = fixed_state("can", channel="acc", sign=1.0, magnitude=0.5)
    out = can_inject(EgoAction(0.0, 0.9), 1.0, state)
    assert out.acc == 1.0


def test_can_inject_identity_outside_burst():
    state = fixed_state("can", channel="steer", sign=1.0, magnitude=0.5)
    a = EgoAction(0.2, 0.2)
    assert can_inject(a, 10.0, state) == a        # after the 5 s burst
    none_state = AttackState.for_episode(AttackConfig(kind="none"),
                                         make_rng(0, "attack"))
    assert can_inject(a, 1.0, none_state) == a


# -- scan spoofing --------------------------------------------------------

def open_world():
    scn = ScenarioConfig(route_kind="straight", lane_width_m=200.0)
    return reset_episode(0, scn, VehicleConfig(), LidarConfig())


def test_spoof_places_phantom_in_forward_sector():
    w = open_world()
    state = fixed_state("lidar", lateral_jitter=0.0)
    ranges = lidar_spoof(raycast_lidar(w), w, 1.0, state)
    # Nearest phantom face is 4 - 0.5 = 3.5 m dead ahead.
    assert ranges[0] == pytest.approx(3.5, abs=0.05)
    # Outside the 30 degree sector nothing changes.
    n = len(ranges)
    rel = (np.arange(n) * (360.0 / n) + 180.0) % 360.0 - 180.0
    assert np.all(ranges[np.abs(rel) > 15.0] == 60.0)


def test_spoof_never_lengthens_real_returns():
    w = open_world()
    from riskdrive.world import ObstacleBox
    w.obstacles.append(ObstacleBox(2.0, 0.0, 0.0, (0.5, 0.5)))
    real = raycast_lidar(w)
    state = fixed_state("lidar", lateral_jitter=0.0)
    spoofed = lidar_spoof(real, w, 1.0, state)
    assert np.all(spoofed <= real + 1e-12)
    assert spoofed[0] == pytest.approx(real[0])   # real box is closer


def test_spoof_identity_outside_burst():
    w = open_world()
    state = fixed_state("lidar", lateral_jitter=0.0)
    real = raycast_lidar(w)
    assert np.array_equal(lidar_spoof(real, w, 20.0, state), real)


# -- success bookkeeping --------------------------------------------------

def test_attack_success_window_semantics():
    cfg = AttackConfig(kind="can", period_s=30.0, duration_s=5.0,
                       success_window_s=3.0)
    state = AttackState(cfg=cfg, rng=make_rng(0, "attack"), start_offset_s=0.0)
    # Violation 2 s after burst end: inside the window.
    bursts, any_hit = attack_success([("collision", 7.0)], state, 10.0)
    assert bursts == [True] and any_hit
    # Violation 4 s after burst end: outside.
    bursts, any_hit = attack_success([("off_road", 9.0)], state, 10.0)
    assert bursts == [False] and not any_hit
    # Goal events never count.
    bursts, any_hit = attack_success([("goal", 3.0)], state, 10.0)
    assert not any_hit


def test_attack_success_none_kind_is_empty():
    state = AttackState.for_episode(AttackConfig(kind="none"),
                                    make_rng(0, "attack"))
    assert attack_success([("collision", 1.0)], state, 10.0) == ([], False)


def test_attack_success_multiple_bursts():
    cfg = AttackConfig(kind="lidar", period_s=10.0, duration_s=2.0,
                       success_window_s=1.0)
    state = AttackState(cfg=cfg, rng=make_rng(0, "attack"), start_offset_s=0.0)
    bursts, any_hit = attack_success([("collision", 12.5)], state, 25.0)
    assert bursts == [False, True, False] and any_hit


# -- substream isolation --------------------------------------------------

def test_zero_duration_attack_matches_clean_episode():
    """Enabling an attack that never fires must not perturb the world."""
    base = RunConfig()
    base.scenario.horizon = 60
    base.scenario.traffic_density = 1.0
    base.expert.mode = "none"
    clean = run_episode(base, 5, random_policy(make_rng(5, "policy")))

    import copy
    attacked_cfg = copy.deepcopy(base)
    attacked_cfg.attack.kind = "lidar"
    attacked_cfg.attack.duration_s = 0.0
    attacked = run_episode(attacked_cfg, 5,
                           random_policy(make_rng(5, "policy")))
    for a, b in zip(clean.trace.records, attacked.trace.records):
        assert a["x"] == b["x"] and a["y"] == b["y"]
        assert a["u"] == b["u"]
