"""Configuration dataclasses, YAML loading, and config fingerprinting.

Every tunable constant in the stack lives here so experiments are fully
described by (config, seed).  Sections mirror the subsystem layout:
scenario / vehicle / irs / shields / bandit / replay / sac / reward /
attack / expert / train.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml


class ConfigError(ValueError):
    """Raised for invalid or inconsistent configuration values."""


@dataclass
class ScenarioConfig:
    route_kind: str = "straight"        # straight | curve | mixed
    route_length_m: float = 200.0
    curve_radius_m: float = 50.0
    lane_width_m: float = 4.0
    traffic_density: float = 0.0        # vehicles per 100 m of route
    obstacle_count: int = 0
    horizon: int = 1000
    goal_radius_m: float = 3.0
    ego_start_speed: float = 0.0

    def validate(self) -> None:
        if self.route_length_m <= 0:
            raise ConfigError("route_length_m must be positive")
        if self.traffic_density < 0:
            raise ConfigError("traffic_density must be nonnegative")
        if self.obstacle_count < 0:
            raise ConfigError("obstacle_count must be nonnegative")
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if self.lane_width_m <= 0:
            raise ConfigError("lane_width_m must be positive")
        if self.route_kind not in ("straight", "curve", "mixed"):
            raise ConfigError(f"unknown route_kind {self.route_kind!r}")


@dataclass
class VehicleConfig:
    wheelbase_m: float = 2.5
    half_length_m: float = 2.0
    half_width_m: float = 0.9
    steer_max_rad: float = 0.35
    acc_min: float = -4.0               # m/s^2 at acc command -1
    acc_max: float = 2.5                # m/s^2 at acc command +1
    steer_rate_cap: float = 0.2         # per tick, normalized units
    acc_rate_cap: float = 0.4           # per tick, normalized units
    max_speed_mps: float = 15.0         # drivetrain top speed
    dt: float = 0.1


@dataclass
class LidarConfig:
    n_beams: int = 72
    max_range_m: float = 60.0


@dataclass
class IrsConfig:
    weights: tuple[float, float, float] = (0.3, 0.4, 0.3)
    threshold: float = 0.3
    kappa_max: float = math.tan(0.35) / 2.5
    tau_ttc_s: float = 1.5
    curvature_gain: float = 4.0
    v_floor: float = 0.5                # m/s floor for executed curvature
    eps_closing: float = 0.1            # m/s floor for closing speed
    disable_curv: bool = False
    disable_ttc: bool = False
    disable_ood: bool = False
    uniform_weights: bool = False

    def effective_weights(self) -> tuple[float, float, float]:
        if self.uniform_weights:
            return (1 / 3, 1 / 3, 1 / 3)
        return self.weights

    def validate(self) -> None:
        w = self.effective_weights()
        if any(wi < 0 for wi in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ConfigError("irs weights must be nonnegative and sum to 1")
        if not 0 < self.threshold < 1:
            raise ConfigError("irs threshold must be in (0, 1)")
        if self.kappa_max <= 0 or self.tau_ttc_s <= 0:
            raise ConfigError("kappa_max and tau_ttc_s must be positive")


@dataclass
class ShieldConfig:
    ema_decay: float = 0.3
    alpha_rate_cap: float = 0.1
    brake_level: float = -0.5
    speed_cap_mps: float = 5.0
    steer_band: float = 0.3
    gain_min: float = 0.5
    gain_max: float = 1.5
    adaptive_gain: bool = True
    disabled: bool = False              # force alpha = 0 (robustness baseline)


@dataclass
class BanditConfig:
    learning_rate: float = 0.05
    effort_coef: float = 0.25
    feedback_horizon_ticks: int = 30
    temperature0: float = 1.0
    anneal_factor: float = 0.9995
    temperature_floor: float = 0.1
    fixed_shield: Optional[str] = None  # bypass selection (ablation)


@dataclass
class ReplayConfig:
    capacity: int = 100_000
    priority_power: float = 0.6
    is_exponent0: float = 0.4
    is_exponent_final: float = 1.0
    priority_floor: float = 1e-3
    irs_coef: float = 1.0
    takeover_coef: float = 2.0


@dataclass
class SacConfig:
    hidden: int = 64
    lr: float = 1e-4
    batch_size: int = 1024
    discount: float = 0.99
    target_smoothing: float = 0.995
    target_entropy: float = -2.0
    learning_starts: int = 100
    init_temperature: float = 0.2


@dataclass
class RewardConfig:
    progress_weight: float = 1.0        # per meter advanced
    violation_penalty: float = 5.0
    takeover_penalty: float = 2.0
    irs_shaping: float = 0.5
    shield_effort_penalty: float = 0.1


@dataclass
class AttackConfig:
    kind: str = "none"                  # none | can | lidar
    period_s: float = 30.0
    duration_s: float = 5.0
    can_magnitude: float = 0.5
    spoof_sector_deg: float = 30.0
    spoof_distance_m: float = 4.0
    spoof_jitter_m: float = 0.5
    success_window_s: float = 3.0

    def validate(self) -> None:
        if self.kind not in ("none", "can", "lidar"):
            raise ConfigError(f"unknown attack kind {self.kind!r}")
        if self.duration_s >= self.period_s:
            raise ConfigError("attack duration must be shorter than its period")
        if not 0 <= self.can_magnitude <= 0.5:
            raise ConfigError("can_magnitude must lie in [0, 0.5]")


@dataclass
class ExpertConfig:
    mode: str = "scripted"              # scripted | ui | none
    ttc_trigger_s: float = 0.8
    lateral_trigger_frac: float = 0.8   # of lane half-width
    release_hold_ticks: int = 10
    reaction_delay_ticks: int = 0       # trigger must persist this long
    yield_to_mitigation: bool = False   # skip TTC trigger if safety layer acts
    mitigation_alpha: float = 0.25      # authority deemed a visible response
    mitigation_decel: float = -1.0      # commanded m/s^2 deemed a response
    target_speed: float = 6.0
    lookahead_gain: float = 1.0
    lookahead_min_m: float = 3.0


@dataclass
class TrainConfig:
    total_ticks: int = 30_000
    rollout_ticks: int = 1000
    grad_steps: int = 1000
    checkpoint_every: int = 10_000
    no_shield_penalty: bool = False     # ablation: zero shield-effort penalty


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    lidar: LidarConfig = field(default_factory=LidarConfig)
    irs: IrsConfig = field(default_factory=IrsConfig)
    shields: ShieldConfig = field(default_factory=ShieldConfig)
    bandit: BanditConfig = field(default_factory=BanditConfig)
    replay: ReplayConfig = field(default_factory=ReplayConfig)
    sac: SacConfig = field(default_factory=SacConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    expert: ExpertConfig = field(default_factory=ExpertConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self) -> "RunConfig":
        self.scenario.validate()
        self.irs.validate()
        self.attack.validate()
        return self

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _merge_section(obj: Any, data: dict[str, Any], path: str) -> None:
    names = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"unknown config key {path}.{key}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(f"{path}.{key} must be a mapping")
            _merge_section(current, value, f"{path}.{key}")
        elif isinstance(current, tuple):
            setattr(obj, key, tuple(value))
        else:
            setattr(obj, key, value)


def load_config(path: str | Path | None = None,
                overrides: dict[str, Any] | None = None) -> RunConfig:
    """Build a RunConfig from defaults, an optional YAML file, and overrides."""
    cfg = RunConfig()
    if path is not None:
        raw = yaml.safe_load(Path(path).read_text())
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a mapping at top level")
        _merge_section(cfg, raw, "config")
    if overrides:
        _merge_section(cfg, overrides, "config")
    return cfg.validate()
