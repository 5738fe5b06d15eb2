"""Shield transforms, risk-smoothed blending authority, and overrides.

The executor smooths the risk score with an EMA, ramps authority above
the threshold, rate-limits authority changes, blends the shielded
proposal with the nominal action, and lets a human action win outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

import numpy as np

from .config import ShieldConfig
from .world import EgoAction, Observation, WorldState


class ShieldKind(IntEnum):
    STEERING_GUARD = 0
    BRAKE_BIAS = 1
    SPEED_CAP = 2


SHIELD_NAMES = {k: k.name.lower() for k in ShieldKind}


@dataclass
class BlendState:
    irs_ema: float = 0.0
    prev_alpha: float = 0.0
    ema_decay: float = 0.3
    alpha_rate_cap: float = 0.1
    authority_gain: float = 1.0

    @classmethod
    def from_config(cls, cfg: ShieldConfig) -> "BlendState":
        return cls(ema_decay=cfg.ema_decay, alpha_rate_cap=cfg.alpha_rate_cap)


@dataclass(frozen=True)
class ControlDecision:
    nominal: EgoAction
    shield: Optional[ShieldKind]
    safeguarded: EgoAction
    authority: float
    executed: EgoAction
    override: bool
    effort: float


def smooth_and_authority(irs: float, state: BlendState,
                         threshold: float) -> float:
    """Update the EMA and return the rate-limited blending authority.

    Authority is 0 at or below the threshold, ramps linearly to 1 at
    EMA = 1, scaled by the bandit-tuned gain and re-clamped.
    """
    lam = state.ema_decay
    state.irs_ema = (1 - lam) * state.irs_ema + lam * irs
    if state.irs_ema <= threshold:
        raw = 0.0
    else:
        raw = (state.irs_ema - threshold) / (1 - threshold)
        raw = min(max(raw * state.authority_gain, 0.0), 1.0)
    delta = raw - state.prev_alpha
    delta = min(max(delta, -state.alpha_rate_cap), state.alpha_rate_cap)
    alpha = min(max(state.prev_alpha + delta, 0.0), 1.0)
    state.prev_alpha = alpha
    return alpha


def pure_pursuit_steer(world: WorldState, lookahead_min: float = 3.0,
                       lookahead_gain: float = 1.0) -> float:
    """Normalized lane-tracking steer toward a lookahead point on the route."""
    ego = world.ego
    s, _, _ = world.route.project(ego.x, ego.y)
    la = max(lookahead_min, lookahead_gain * ego.speed)
    tx, ty, _ = world.route.pose_at(min(s + la, world.route.length))
    dx, dy = tx - ego.x, ty - ego.y
    # Angle to target in the ego frame.
    local_x = math.cos(ego.heading) * dx + math.sin(ego.heading) * dy
    local_y = -math.sin(ego.heading) * dx + math.cos(ego.heading) * dy
    dist2 = local_x ** 2 + local_y ** 2
    if dist2 < 1e-9:
        return 0.0
    curvature = 2 * local_y / dist2
    steer_rad = math.atan(curvature * world.vehicle.wheelbase_m)
    return min(max(steer_rad / world.vehicle.steer_max_rad, -1.0), 1.0)


def apply_shield(kind: ShieldKind, a: EgoAction, obs: Observation,
                 cfg: ShieldConfig, track_steer: float) -> EgoAction:
    """Cue-specific safeguarded proposal; only the risky channel changes."""
    speed = obs.ego_kinematics[0]
    if kind == ShieldKind.STEERING_GUARD:
        lo, hi = track_steer - cfg.steer_band, track_steer + cfg.steer_band
        return EgoAction(min(max(a.steer, lo), hi), a.acc).clamped()
    if kind == ShieldKind.BRAKE_BIAS:
        return EgoAction(a.steer, min(a.acc, cfg.brake_level)).clamped()
    if kind == ShieldKind.SPEED_CAP:
        if speed > cfg.speed_cap_mps:
            return EgoAction(a.steer, min(a.acc, 0.0)).clamped()
        return a.clamped()
    raise ValueError(f"unknown shield {kind!r}")


def blend(a: EgoAction, safeguarded: EgoAction, alpha: float) -> EgoAction:
    steer = (1 - alpha) * a.steer + alpha * safeguarded.steer
    acc = (1 - alpha) * a.acc + alpha * safeguarded.acc
    return EgoAction(steer, acc).clamped()


def resolve_override(blended: EgoAction,
                     human: Optional[EgoAction]) -> tuple[EgoAction, bool]:
    """A human action this tick wins verbatim regardless of risk."""
    if human is not None:
        return human, True
    return blended, False


def effort(a: EgoAction, safeguarded: EgoAction) -> float:
    return float(np.hypot(safeguarded.steer - a.steer, safeguarded.acc - a.acc))
