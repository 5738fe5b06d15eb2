"""Scripted operator: control quality, triggers, hysteresis."""

import numpy as np
import pytest

from riskdrive.config import ExpertConfig, RunConfig
from riskdrive.episode import run_episode
from riskdrive.expert import ExpertState, expert_action, should_takeover
from riskdrive.world import EgoAction, build_observation
from tests.conftest import make_observation


@pytest.fixture
def ecfg() -> ExpertConfig:
    return ExpertConfig()


def test_centered_at_target_speed_is_idle(straight_world, ecfg):
    straight_world.ego.speed = ecfg.target_speed
    obs = build_observation(straight_world)
    a = expert_action(straight_world, obs, ecfg)
    assert abs(a.steer) < 0.05 and abs(a.acc) < 0.05


def test_accelerates_toward_target_speed(straight_world, ecfg):
    straight_world.ego.speed = 0.0
    obs = build_observation(straight_world)
    a = expert_action(straight_world, obs, ecfg)
    assert a.acc == pytest.approx(1.0)     # 0.5 * 6 clamped to 1


def test_brakes_hard_when_contact_imminent(straight_world, ecfg):
    straight_world.ego.speed = ecfg.target_speed
    obs = make_observation(speed=ecfg.target_speed, d=3.0, v=6.0)  # TTC 0.5 s
    a = expert_action(straight_world, obs, ecfg)
    assert a.acc == -1.0


def test_takeover_on_low_ttc(straight_world, ecfg):
    obs = make_observation(d=3.0, v=6.0)          # TTC 0.5 < 0.8
    assert should_takeover(straight_world, obs, ecfg, ExpertState())


def test_no_takeover_when_clear(straight_world, ecfg):
    obs = make_observation(d=100.0, v=1.0)
    assert not should_takeover(straight_world, obs, ecfg, ExpertState())


def test_takeover_on_lateral_excursion(straight_world, ecfg):
    obs = make_observation(d=1e6, v=0.1)
    straight_world.ego.y = 0.9 * straight_world.route.half_width
    assert should_takeover(straight_world, obs, ecfg, ExpertState())
    straight_world.ego.y = 0.5 * straight_world.route.half_width
    assert not should_takeover(straight_world, obs, ecfg, ExpertState())


def test_release_hysteresis_holds_ten_ticks(straight_world, ecfg):
    state = ExpertState()
    danger = make_observation(d=3.0, v=6.0)
    clear = make_observation(d=1e6, v=0.1)
    assert should_takeover(straight_world, danger, ecfg, state)
    held = 0
    while should_takeover(straight_world, clear, ecfg, state):
        held += 1
        assert held < 50
    assert held == ecfg.release_hold_ticks


def test_reaction_delay_defers_engagement(straight_world):
    ecfg = ExpertConfig(reaction_delay_ticks=3)
    state = ExpertState()
    danger = make_observation(d=3.0, v=6.0)
    engaged = [should_takeover(straight_world, danger, ecfg, state)
               for _ in range(6)]
    assert engaged == [False, False, False, True, True, True]


def test_reaction_delay_resets_when_trigger_clears(straight_world):
    ecfg = ExpertConfig(reaction_delay_ticks=3)
    state = ExpertState()
    danger = make_observation(d=3.0, v=6.0)
    clear = make_observation(d=1e6, v=0.1)
    should_takeover(straight_world, danger, ecfg, state)
    should_takeover(straight_world, danger, ecfg, state)
    should_takeover(straight_world, clear, ecfg, state)
    assert state.trigger_streak == 0
    engaged = [should_takeover(straight_world, danger, ecfg, state)
               for _ in range(4)]
    assert engaged == [False, False, False, True]


def test_yield_to_mitigation_waives_ttc_trigger(straight_world):
    ecfg = ExpertConfig(yield_to_mitigation=True)
    danger = make_observation(d=3.0, v=6.0)
    # Visible authority: waived.
    assert not should_takeover(straight_world, danger, ecfg, ExpertState(),
                               alpha=0.3)
    # Visible braking: waived.
    assert not should_takeover(straight_world, danger, ecfg, ExpertState(),
                               commanded_acc=-2.0)
    # No visible mitigation: still triggers.
    assert should_takeover(straight_world, danger, ecfg, ExpertState(),
                           alpha=0.1, commanded_acc=0.5)


def test_yield_never_waives_lateral_trigger(straight_world):
    ecfg = ExpertConfig(yield_to_mitigation=True)
    obs = make_observation(d=1e6, v=0.1)
    straight_world.ego.y = 0.9 * straight_world.route.half_width
    assert should_takeover(straight_world, obs, ecfg, ExpertState(), alpha=1.0)


def test_expert_alone_completes_straight_episodes():
    """Driving solely on the scripted operator must be near-flawless."""
    cfg = RunConfig()
    cfg.scenario.route_kind = "straight"
    cfg.scenario.obstacle_count = 0
    cfg.scenario.traffic_density = 0.0
    cfg.expert.mode = "scripted"

    def expert_policy(obs, world):
        return expert_action(world, obs, cfg.expert)

    goals = 0
    for seed in range(20):
        result = run_episode(cfg, seed, expert_policy)
        goals += result.outcome.kind == "goal"
    assert goals >= 19
