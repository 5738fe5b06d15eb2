"""Schedule-driven attack injectors and attack-success bookkeeping.

Bus injection adds a bounded piecewise-constant bias on one action
channel after the policy, before the safety layer.  LiDAR spoofing
overwrites a forward azimuth sector with ranges of a phantom box 4 m
ahead.  Both draw per-burst randomness from a dedicated substream so
enabling an attack never perturbs traffic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import AttackConfig
from .geometry import box_segments, ray_segment_distances
from .world import EgoAction, WorldState, lidar_angles


@dataclass
class BurstParams:
    index: int
    channel: str = "steer"              # steer | acc (bus injection)
    sign: float = 1.0
    magnitude: float = 0.5
    lateral_jitter: float = 0.0         # meters (lidar spoof)


@dataclass
class AttackState:
    """Per-episode attack schedule state; burst params drawn once per burst."""
    cfg: AttackConfig
    rng: np.random.Generator
    start_offset_s: float = 0.0
    _bursts: dict[int, BurstParams] = field(default_factory=dict)

    @classmethod
    def for_episode(cls, cfg: AttackConfig,
                    rng: np.random.Generator) -> "AttackState":
        offset = float(rng.uniform(0.0, cfg.period_s)) if cfg.kind != "none" else 0.0
        return cls(cfg=cfg, rng=rng, start_offset_s=offset)

    def burst_index(self, t: float) -> Optional[int]:
        """Index of the active burst at time t, or None outside bursts."""
        if self.cfg.kind == "none":
            return None
        rel = t - self.start_offset_s
        if rel < 0:
            return None
        idx = int(rel // self.cfg.period_s)
        if rel - idx * self.cfg.period_s < self.cfg.duration_s:
            return idx
        return None

    def burst_window(self, index: int) -> tuple[float, float]:
        start = self.start_offset_s + index * self.cfg.period_s
        return start, start + self.cfg.duration_s

    def params_for(self, index: int) -> BurstParams:
        if index not in self._bursts:
            cfg = self.cfg
            self._bursts[index] = BurstParams(
                index=index,
                channel="steer" if self.rng.random() < 0.5 else "acc",
                sign=1.0 if self.rng.random() < 0.5 else -1.0,
                magnitude=float(self.rng.uniform(0.5, 1.0)) * cfg.can_magnitude,
                lateral_jitter=float(self.rng.uniform(-cfg.spoof_jitter_m,
                                                      cfg.spoof_jitter_m)),
            )
        return self._bursts[index]


def can_inject(a: EgoAction, t: float, state: AttackState) -> EgoAction:
    """Saturated bias on one channel during bursts; identity otherwise."""
    if state.cfg.kind != "can":
        return a
    idx = state.burst_index(t)
    if idx is None:
        return a
    p = state.params_for(idx)
    eta = p.sign * p.magnitude
    if p.channel == "steer":
        return EgoAction(a.steer + eta, a.acc).clamped()
    return EgoAction(a.steer, a.acc + eta).clamped()


def lidar_spoof(ranges: np.ndarray, world: WorldState, t: float,
                state: AttackState) -> np.ndarray:
    """Overwrite the forward sector with a phantom box, never lengthening."""
    if state.cfg.kind != "lidar":
        return ranges
    idx = state.burst_index(t)
    if idx is None:
        return ranges
    cfg = state.cfg
    p = state.params_for(idx)
    ego = world.ego
    dist = cfg.spoof_distance_m
    center = np.array([
        ego.x + dist * math.cos(ego.heading) - p.lateral_jitter * math.sin(ego.heading),
        ego.y + dist * math.sin(ego.heading) + p.lateral_jitter * math.cos(ego.heading),
    ])
    p0, p1 = box_segments(center, np.array([0.5, 0.9]), ego.heading)

    angles = lidar_angles(world)
    n = len(angles)
    rel = (np.arange(n) * (360.0 / n) + 180.0) % 360.0 - 180.0  # beam angle from heading
    in_sector = np.abs(rel) <= cfg.spoof_sector_deg / 2.0
    dirs = np.stack([np.cos(angles[in_sector]), np.sin(angles[in_sector])], axis=1)
    phantom = ray_segment_distances(np.array([ego.x, ego.y]), dirs, p0, p1,
                                    world.lidar_cfg.max_range_m)
    out = ranges.copy()
    out[in_sector] = np.minimum(out[in_sector], phantom)
    return out


def attack_success(events: list[tuple[str, float]],
                   state: AttackState, episode_end_s: float,
                   ) -> tuple[list[bool], bool]:
    """Per-burst success flags and the episode-level attack-success flag.

    events: (kind, time) safety events; a burst succeeds when a collision
    or off-road event lands in [burst start, burst end + window].
    """
    if state.cfg.kind == "none":
        return [], False
    bursts: list[bool] = []
    idx = 0
    while True:
        start, end = state.burst_window(idx)
        if start > episode_end_s:
            break
        hit = any(kind in ("collision", "off_road")
                  and start <= when <= end + state.cfg.success_window_s
                  for kind, when in events)
        bursts.append(hit)
        idx += 1
    return bursts, any(bursts)
