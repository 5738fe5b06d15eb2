"""Scripted operator oracle: competent classical controller plus a
takeover policy with hysteresis.

Stands in for a live human: pure-pursuit steering with gap-keeping speed
control, seizing control when perceived TTC or lateral offset crosses a
trigger and holding it briefly after triggers clear.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import ExpertConfig
from .shields import pure_pursuit_steer
from .world import EgoAction, Observation, WorldState


@dataclass
class ExpertState:
    hold_remaining: int = 0
    engaged: bool = False
    trigger_streak: int = 0


def expert_action(world: WorldState, obs: Observation,
                  cfg: ExpertConfig) -> EgoAction:
    """Pure-pursuit steering toward the route plus TTC-aware speed control."""
    steer = pure_pursuit_steer(world, cfg.lookahead_min_m, cfg.lookahead_gain)
    speed = world.ego.speed
    # Proportional speed tracking toward the target.
    acc = 0.5 * (cfg.target_speed - speed)
    # Brake proportionally to the TTC deficit below 2x the takeover trigger.
    _, _, d, v = obs.diagnostics
    ttc = d / max(v, 0.1)
    safe_ttc = 2.0 * cfg.ttc_trigger_s
    if ttc < safe_ttc:
        acc = min(acc, -(safe_ttc - ttc) / cfg.ttc_trigger_s)
    return EgoAction(steer, acc).clamped()


def should_takeover(world: WorldState, obs: Observation, cfg: ExpertConfig,
                    state: ExpertState, alpha: float = 0.0,
                    commanded_acc: float = 0.0) -> bool:
    """Trigger on perceived TTC or lateral offset; hold through hysteresis.

    Optional human-like refinements (off by default): the trigger must
    persist `reaction_delay_ticks` before control is seized, and the TTC
    trigger is waived while the safety layer is visibly mitigating
    (authority or commanded deceleration on the dashboard).
    """
    _, _, d, v = obs.diagnostics
    ttc = d / max(v, 0.1)
    _, lateral, _ = world.route.project(world.ego.x, world.ego.y)
    lateral_limit = cfg.lateral_trigger_frac * world.route.half_width
    ttc_danger = ttc < cfg.ttc_trigger_s
    if cfg.yield_to_mitigation and ttc_danger:
        mitigating = (alpha >= cfg.mitigation_alpha
                      or commanded_acc <= cfg.mitigation_decel)
        if mitigating:
            ttc_danger = False
    triggered = ttc_danger or abs(lateral) > lateral_limit
    if triggered:
        state.trigger_streak += 1
        if state.engaged or state.trigger_streak > cfg.reaction_delay_ticks:
            state.hold_remaining = cfg.release_hold_ticks
            state.engaged = True
            return True
        return False
    state.trigger_streak = 0
    if state.hold_remaining > 0:
        state.hold_remaining -= 1
        return True
    state.engaged = False
    return False
