"""Deterministic 2D driving world.

Ego follows a kinematic bicycle model; background vehicles follow IDM
along the route; obstacles are static oriented boxes.  Everything is a
pure function of (seed, scenario, action sequence).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .config import ConfigError, LidarConfig, ScenarioConfig, VehicleConfig
from .geometry import (Route, box_segments, boxes_overlap, polyline_segments,
                       ray_segment_distances, wrap_angle)

# Named RNG substreams; fixed indices keep streams stable across runs and
# let attacks be toggled without perturbing traffic randomness.
_STREAMS = {"scenario": 0, "traffic": 1, "attack": 2, "noise": 3,
            "policy": 4, "bandit": 5, "expert": 6}

THREAT_SENTINEL = 1e6


def make_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, _STREAMS[name])))


@dataclass
class EgoState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0
    yaw_rate: float = 0.0
    last_acc: float = 0.0


@dataclass(frozen=True)
class EgoAction:
    steer: float
    acc: float

    def clamped(self) -> "EgoAction":
        return EgoAction(min(max(self.steer, -1.0), 1.0),
                         min(max(self.acc, -1.0), 1.0))

    def as_array(self) -> np.ndarray:
        return np.array([self.steer, self.acc])


@dataclass
class ObstacleBox:
    x: float
    y: float
    heading: float
    half_extents: tuple[float, float]   # (along heading, across)


@dataclass
class TrafficVehicle:
    s_pos: float                        # arc length along route
    speed: float
    half_extents: tuple[float, float] = (2.0, 0.9)
    # IDM parameters
    v0: float = 8.0
    headway: float = 1.5
    min_gap: float = 2.0
    accel_max: float = 1.5
    brake_comfort: float = 2.0
    brake_max: float = 6.0

    def pose(self, route: Route) -> tuple[float, float, float]:
        return route.pose_at(self.s_pos)


@dataclass
class WorldState:
    time_s: float
    ego: EgoState
    route: Route
    obstacles: list[ObstacleBox]
    traffic: list[TrafficVehicle]
    scenario: ScenarioConfig
    vehicle: VehicleConfig
    lidar_cfg: LidarConfig
    seed: int
    rng_traffic: np.random.Generator = field(repr=False, default=None)

    def serialize(self) -> dict:
        """Deterministic plain-data snapshot (for tests and traces)."""
        return {
            "time_s": self.time_s,
            "ego": [self.ego.x, self.ego.y, self.ego.heading, self.ego.speed,
                    self.ego.yaw_rate, self.ego.last_acc],
            "obstacles": [[o.x, o.y, o.heading, list(o.half_extents)]
                          for o in self.obstacles],
            "traffic": [[v.s_pos, v.speed] for v in self.traffic],
        }


@dataclass(frozen=True)
class Observation:
    ego_kinematics: tuple[float, float, float, float]  # speed, heading err, lateral, yaw rate
    lidar: np.ndarray
    lane_features: tuple[float, ...]    # curvature at lookaheads + goal distance
    diagnostics: tuple[float, float, float, float]     # kappa_plan, kappa_exec, d, v

    def vector(self) -> np.ndarray:
        return np.concatenate([
            np.array(self.ego_kinematics),
            self.lidar / 60.0,
            np.array(self.lane_features),
            np.array([self.diagnostics[0], self.diagnostics[1],
                      min(self.diagnostics[2], 100.0) / 100.0,
                      self.diagnostics[3] / 10.0]),
        ])


@dataclass(frozen=True)
class EpisodeOutcome:
    kind: str                           # goal | collision | off_road | timeout
    step_count: int
    final_time_s: float


def _build_centerline(scn: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """Centerline polyline at ~1 m spacing for the requested route shape."""
    spacing = 1.0

    def arc(x, y, heading, radius, angle):
        n = max(int(abs(angle) * radius / spacing), 2)
        sign = 1.0 if angle > 0 else -1.0
        cx = x - sign * radius * math.sin(heading)
        cy = y + sign * radius * math.cos(heading)
        t = heading - sign * math.pi / 2 + sign * np.linspace(0, abs(angle), n + 1)[1:]
        xs = cx + radius * np.cos(t)
        ys = cy + radius * np.sin(t)
        return np.stack([xs, ys], axis=1), heading + angle

    def straight(x, y, heading, length):
        n = max(int(length / spacing), 1)
        d = np.linspace(0, length, n + 1)[1:]
        xs = x + d * math.cos(heading)
        ys = y + d * math.sin(heading)
        return np.stack([xs, ys], axis=1), heading

    pts = [np.array([[0.0, 0.0]])]
    x = y = heading = 0.0
    total = 0.0

    def extend(chunk, new_heading):
        nonlocal x, y, heading, total
        pts.append(chunk)
        x, y = chunk[-1]
        heading = new_heading
        total = total + 0  # length tracked via target below

    if scn.route_kind == "straight":
        chunk, heading = straight(x, y, heading, scn.route_length_m)
        extend(chunk, heading)
    elif scn.route_kind == "curve":
        lead = min(50.0, scn.route_length_m / 4)
        chunk, heading = straight(x, y, heading, lead)
        extend(chunk, heading)
        chunk, heading = arc(x, y, heading, scn.curve_radius_m, math.pi / 2)
        extend(chunk, heading)
        rest = max(scn.route_length_m - lead - scn.curve_radius_m * math.pi / 2, 10.0)
        chunk, heading = straight(x, y, heading, rest)
        extend(chunk, heading)
    else:  # mixed
        remaining = scn.route_length_m
        while remaining > 0:
            if rng.random() < 0.5:
                seg = min(float(rng.uniform(30, 60)), remaining)
                chunk, heading = straight(x, y, heading, seg)
            else:
                radius = float(rng.uniform(30, 80))
                angle = float(rng.uniform(0.3, 1.2)) * (1 if rng.random() < 0.5 else -1)
                seg = min(radius * abs(angle), remaining)
                chunk, heading = arc(x, y, heading, radius, seg / radius * np.sign(angle))
            extend(chunk, heading)
            remaining -= seg
    return np.concatenate(pts, axis=0)


def reset_episode(seed: int, scenario: ScenarioConfig,
                  vehicle: VehicleConfig | None = None,
                  lidar_cfg: LidarConfig | None = None) -> WorldState:
    """Build a fully initialized world; (seed, scenario) fixes everything."""
    scenario.validate()
    vehicle = vehicle or VehicleConfig()
    lidar_cfg = lidar_cfg or LidarConfig()
    rng_scn = make_rng(seed, "scenario")
    centerline = _build_centerline(scenario, rng_scn)
    route = Route(centerline, scenario.lane_width_m)

    obstacles: list[ObstacleBox] = []
    if scenario.obstacle_count > 0:
        lo, hi = 40.0, max(route.length - 30.0, 45.0)
        margin = route.half_width - 0.6
        for s_pos in sorted(rng_scn.uniform(lo, hi, scenario.obstacle_count)):
            lat = float(rng_scn.uniform(-margin, margin))
            x, y, h = route.pose_at(float(s_pos))
            x += -math.sin(h) * lat
            y += math.cos(h) * lat
            obstacles.append(ObstacleBox(x, y, h, (0.5, 0.5)))

    rng_traffic = make_rng(seed, "traffic")
    traffic: list[TrafficVehicle] = []
    n_traffic = int(round(scenario.traffic_density * route.length / 100.0))
    if n_traffic > 0:
        slots = np.sort(rng_traffic.uniform(20.0, route.length - 10.0, n_traffic))
        prev = -1e9
        for s_pos in slots:
            s_pos = max(float(s_pos), prev + 12.0)
            if s_pos > route.length - 5.0:
                break
            traffic.append(TrafficVehicle(
                s_pos=s_pos, speed=float(rng_traffic.uniform(2.0, 6.0))))
            prev = s_pos

    x0, y0, h0 = route.pose_at(0.0)
    ego = EgoState(x=x0, y=y0, heading=h0, speed=scenario.ego_start_speed)
    return WorldState(time_s=0.0, ego=ego, route=route, obstacles=obstacles,
                      traffic=traffic, scenario=scenario, vehicle=vehicle,
                      lidar_cfg=lidar_cfg, seed=seed, rng_traffic=rng_traffic)


def physical_controls(u: EgoAction, vehicle: VehicleConfig) -> tuple[float, float]:
    """Map normalized action to (steer angle rad, acceleration m/s^2).

    Positive and negative acc commands scale their respective bounds so a
    zero command is a true coast (no phantom braking).
    """
    steer = u.steer * vehicle.steer_max_rad
    acc = u.acc * vehicle.acc_max if u.acc >= 0 else u.acc * (-vehicle.acc_min)
    return steer, acc


def rate_limit(u: EgoAction, prev: Optional[EgoAction],
               vehicle: VehicleConfig) -> EgoAction:
    """First-order rate limiting on normalized controls, per tick."""
    if prev is None:
        return u.clamped()
    ds = min(max(u.steer - prev.steer, -vehicle.steer_rate_cap), vehicle.steer_rate_cap)
    da = min(max(u.acc - prev.acc, -vehicle.acc_rate_cap), vehicle.acc_rate_cap)
    return EgoAction(prev.steer + ds, prev.acc + da).clamped()


def _idm_accel(v: TrafficVehicle, gap: float, lead_speed: float) -> float:
    s_star = v.min_gap + v.speed * v.headway + \
        v.speed * (v.speed - lead_speed) / (2 * math.sqrt(v.accel_max * v.brake_comfort))
    gap = max(gap, 0.1)
    acc = v.accel_max * (1 - (v.speed / v.v0) ** 4 - (max(s_star, 0.0) / gap) ** 2)
    return max(acc, -v.brake_max)


def step_dynamics(world: WorldState, u: EgoAction, dt: float) -> WorldState:
    """Advance ego (bicycle model) and traffic (IDM) by one tick, in place."""
    if not (math.isfinite(u.steer) and math.isfinite(u.acc)):
        raise FloatingPointError("non-finite action reached the plant")
    u = u.clamped()
    ego = world.ego
    steer_rad, acc_phys = physical_controls(u, world.vehicle)

    yaw_rate = ego.speed * math.tan(steer_rad) / world.vehicle.wheelbase_m
    ego.x += ego.speed * math.cos(ego.heading) * dt
    ego.y += ego.speed * math.sin(ego.heading) * dt
    ego.heading = wrap_angle(ego.heading + yaw_rate * dt)
    ego.speed = min(max(ego.speed + acc_phys * dt, 0.0),
                    world.vehicle.max_speed_mps)
    ego.yaw_rate = yaw_rate
    ego.last_acc = acc_phys

    # Traffic: each vehicle follows the nearest leader (vehicle, obstacle,
    # or ego) ahead of it on the route.
    ego_s, ego_lat, _ = world.route.project(ego.x, ego.y)
    obstacle_ss = []
    for o in world.obstacles:
        s_o, lat_o, _ = world.route.project(o.x, o.y)
        if abs(lat_o) < world.route.half_width:
            obstacle_ss.append(s_o)
    ordered = sorted(world.traffic, key=lambda v: v.s_pos)
    for i, veh in enumerate(ordered):
        front = veh.s_pos + veh.half_extents[0]
        gap, lead_speed = 1e6, veh.speed
        if i + 1 < len(ordered):
            nxt = ordered[i + 1]
            gap = nxt.s_pos - nxt.half_extents[0] - front
            lead_speed = nxt.speed
        for s_o in obstacle_ss:
            g = s_o - 0.5 - front
            if 0 <= g < gap:
                gap, lead_speed = g, 0.0
        if abs(ego_lat) < world.route.half_width:
            g = ego_s - world.vehicle.half_length_m - front
            if 0 <= g < gap:
                gap, lead_speed = g, ego.speed
        acc = _idm_accel(veh, gap, lead_speed)
        veh.s_pos += veh.speed * dt
        veh.speed = max(veh.speed + acc * dt, 0.0)

    world.time_s += dt
    return world


def _lidar_segment_pool(world: WorldState) -> tuple[np.ndarray, np.ndarray]:
    p0s, p1s = [], []
    half = world.route.half_width
    for edge in (world.route.offset_polyline(half),
                 world.route.offset_polyline(-half)):
        a, b = polyline_segments(edge[::2])
        p0s.append(a)
        p1s.append(b)
    for o in world.obstacles:
        a, b = box_segments(np.array([o.x, o.y]), np.array(o.half_extents), o.heading)
        p0s.append(a)
        p1s.append(b)
    for v in world.traffic:
        x, y, h = v.pose(world.route)
        a, b = box_segments(np.array([x, y]), np.array(v.half_extents), h)
        p0s.append(a)
        p1s.append(b)
    return np.concatenate(p0s), np.concatenate(p1s)


def lidar_angles(world: WorldState) -> np.ndarray:
    n = world.lidar_cfg.n_beams
    return world.ego.heading + 2 * math.pi * np.arange(n) / n


def raycast_lidar(world: WorldState) -> np.ndarray:
    """Ranges for beams evenly spaced over 360 deg, starting at ego heading."""
    angles = lidar_angles(world)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    origin = np.array([world.ego.x, world.ego.y])
    p0, p1 = _lidar_segment_pool(world)
    ranges = ray_segment_distances(origin, dirs, p0, p1,
                                   world.lidar_cfg.max_range_m)
    return np.maximum(ranges, 1e-6)


def planned_curvature(world: WorldState) -> tuple[float, bool]:
    """Signed route curvature at the ego's arc-length projection.

    Returns (kappa_plan, off_route).  Beyond the route end the curvature
    is reported as 0 with the flag set.
    """
    s, _, _ = world.route.project(world.ego.x, world.ego.y)
    if s >= world.route.length - 1e-6:
        return 0.0, True
    return world.route.curvature_at(s), False


def executed_curvature(world: WorldState, v_floor: float = 0.5) -> float:
    return world.ego.yaw_rate / max(world.ego.speed, v_floor)


def threat_gap(world: WorldState, ranges: Optional[np.ndarray] = None,
               eps_closing: float = 0.1) -> tuple[float, float]:
    """Path-aligned bumper gap and closing speed to the most threatening object.

    Geometric candidates come from ground-truth obstacles and traffic in
    the route corridor ahead.  When a LiDAR scan is supplied, returns that
    place a hit clearly nearer than any geometric candidate (e.g. a
    spoofed phantom) override it, treated as static.
    """
    ego = world.ego
    route = world.route
    s_ego, _, _ = route.project(ego.x, ego.y)
    bumper = s_ego + world.vehicle.half_length_m
    half = route.half_width

    best_d, best_lat, best_v = THREAT_SENTINEL, math.inf, eps_closing
    candidates: list[tuple[float, float, float]] = []
    for o in world.obstacles:
        s_o, lat_o, _ = route.project(o.x, o.y)
        if abs(lat_o) <= half and s_o > s_ego:
            candidates.append((s_o - o.half_extents[0] - bumper, abs(lat_o), 0.0))
    for v in world.traffic:
        if v.s_pos > s_ego:
            candidates.append((v.s_pos - v.half_extents[0] - bumper, 0.0, v.speed))
    for d, lat, obj_speed in candidates:
        d = max(d, 0.0)
        if d < best_d or (d == best_d and lat < best_lat):
            best_d, best_lat = d, lat
            best_v = max(ego.speed - obj_speed, eps_closing)

    if ranges is not None:
        angles = lidar_angles(world)
        max_r = world.lidar_cfg.max_range_m
        scan_best = THREAT_SENTINEL
        # Only forward-semicircle hits can be threats in the corridor ahead.
        n = len(angles)
        quarter = n // 4
        fwd = np.concatenate([np.arange(0, quarter + 1),
                              np.arange(n - quarter, n)])
        hit = fwd[ranges[fwd] < max_r - 1e-6]
        if len(hit):
            pts = np.stack([ego.x + ranges[hit] * np.cos(angles[hit]),
                            ego.y + ranges[hit] * np.sin(angles[hit])], axis=1)
            s_e, lat_e = route.project_many(pts)
            ok = (s_e > s_ego) & (np.abs(lat_e) <= 0.8 * half)
            if np.any(ok):
                scan_best = max(float(np.min(s_e[ok])) - bumper, 0.0)
        # Only a hit clearly nearer than geometry (a phantom) overrides it.
        if scan_best < best_d - 0.5:
            best_d = scan_best
            best_v = max(ego.speed, eps_closing)

    if best_d >= THREAT_SENTINEL:
        return THREAT_SENTINEL, eps_closing
    return best_d, best_v


def check_termination(world: WorldState, step: int,
                      horizon: int) -> Optional[EpisodeOutcome]:
    """Fixed precedence: collision, then off_road, then goal, then timeout."""
    ego = world.ego
    ego_c = np.array([ego.x, ego.y])
    ego_h = np.array([world.vehicle.half_length_m, world.vehicle.half_width_m])
    for o in world.obstacles:
        if boxes_overlap(ego_c, ego_h, ego.heading,
                         np.array([o.x, o.y]), np.array(o.half_extents), o.heading):
            return EpisodeOutcome("collision", step, world.time_s)
    for v in world.traffic:
        x, y, h = v.pose(world.route)
        if boxes_overlap(ego_c, ego_h, ego.heading,
                         np.array([x, y]), np.array(v.half_extents), h):
            return EpisodeOutcome("collision", step, world.time_s)
    _, lateral, _ = world.route.project(ego.x, ego.y)
    if abs(lateral) > world.route.half_width + world.vehicle.half_width_m:
        return EpisodeOutcome("off_road", step, world.time_s)
    if np.hypot(*(ego_c - world.route.goal)) <= world.scenario.goal_radius_m:
        return EpisodeOutcome("goal", step, world.time_s)
    if step >= horizon:
        return EpisodeOutcome("timeout", step, world.time_s)
    return None


def build_observation(world: WorldState,
                      ranges: Optional[np.ndarray] = None,
                      v_floor: float = 0.5,
                      eps_closing: float = 0.1) -> Observation:
    """Assemble the policy observation; pass `ranges` to use a (possibly
    spoofed) scan instead of a fresh raycast."""
    if ranges is None:
        ranges = raycast_lidar(world)
    ego = world.ego
    s, lateral, tangent = world.route.project(ego.x, ego.y)
    heading_err = wrap_angle(ego.heading - tangent)
    lookaheads = (5.0, 15.0, 30.0)
    curvs = tuple(world.route.curvature_at(min(s + la, world.route.length))
                  for la in lookaheads)
    goal_dist = float(np.hypot(ego.x - world.route.goal[0],
                               ego.y - world.route.goal[1]))
    k_plan, _ = planned_curvature(world)
    k_exec = executed_curvature(world, v_floor)
    d, v = threat_gap(world, ranges, eps_closing)
    return Observation(
        ego_kinematics=(ego.speed, heading_err, lateral, ego.yaw_rate),
        lidar=ranges,
        lane_features=curvs + (goal_dist,),
        diagnostics=(k_plan, k_exec, d, v),
    )


OBS_DIM = 4 + 72 + 4 + 4
