"""The closed-loop control episode.

Per tick: sense (raycast, possibly spoofed), propose (policy), corrupt
(bus injection), assess (cues -> fused risk), arbitrate (bandit picks a
shield above threshold), blend with rate-limited authority, let the
operator override, actuate, reward, annotate, log.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .attacks import AttackState, attack_success, can_inject, lidar_spoof
from .bandit import BanditArbiter, score_arms
from .config import RunConfig
from .expert import ExpertState, expert_action, should_takeover
from .replay import AnnotatedTransition, Annotations
from .risk import OodModel, assess
from .sac import compose_reward
from .shields import (BlendState, ControlDecision, ShieldKind, apply_shield,
                      blend, effort, pure_pursuit_steer, resolve_override,
                      smooth_and_authority)
from .trace import EpisodeTrace
from .world import (EgoAction, EpisodeOutcome, Observation, WorldState,
                    build_observation, check_termination, make_rng,
                    physical_controls, raycast_lidar, rate_limit,
                    reset_episode, step_dynamics)

Policy = Callable[[Observation, WorldState], EgoAction]


@dataclass
class EpisodeResult:
    outcome: EpisodeOutcome
    trace: EpisodeTrace
    total_reward: float
    events: list[tuple[str, float]]
    takeover_count: int
    attack_succeeded: bool
    transitions: int


@dataclass
class EpisodeHooks:
    """Optional extension points for training, streaming, and live override."""
    on_transition: Optional[Callable[[AnnotatedTransition], None]] = None
    on_snapshot: Optional[Callable[[dict], None]] = None
    override_provider: Optional[Callable[[int], Optional[EgoAction]]] = None
    on_observation: Optional[Callable[[np.ndarray], None]] = None


def random_policy(rng: np.random.Generator) -> Policy:
    def policy(obs: Observation, world: WorldState) -> EgoAction:
        steer, acc = rng.uniform(-1, 1, 2)
        return EgoAction(float(steer), float(acc))
    return policy


def _snapshot(world: WorldState, obs: Observation, record: dict) -> dict:
    return {
        "type": "snapshot",
        "step": record["step"],
        "time_s": record["time_s"],
        "ego": {"x": world.ego.x, "y": world.ego.y,
                "heading": world.ego.heading, "speed": world.ego.speed},
        "lane_width": world.route.lane_width,
        "goal": world.route.goal.tolist(),
        "centerline": None,  # sent once in the hello message
        "obstacles": [[o.x, o.y, o.heading, list(o.half_extents)]
                      for o in world.obstacles],
        "traffic": [list(v.pose(world.route)) + [list(v.half_extents)]
                    for v in world.traffic],
        "lidar": [round(float(r), 3) for r in obs.lidar],
        "cues": record["cues"],
        "irs": record["irs"],
        "irs_ema": record["irs_ema"],
        "alpha": record["alpha"],
        "shield": record["shield"],
        "arm_probs": record["arm_probs"],
        "override": record["override"],
    }


def run_episode(cfg: RunConfig, seed: int, policy: Policy,
                ood_model: Optional[OodModel] = None,
                bandit: Optional[BanditArbiter] = None,
                hooks: Optional[EpisodeHooks] = None,
                reward_overrides: Optional[dict] = None) -> EpisodeResult:
    """Run one full episode of the shielded control loop."""
    hooks = hooks or EpisodeHooks()
    world = reset_episode(seed, cfg.scenario, cfg.vehicle, cfg.lidar)
    attack_state = AttackState.for_episode(cfg.attack, make_rng(seed, "attack"))
    blend_state = BlendState.from_config(cfg.shields)
    expert_state = ExpertState()
    bandit = bandit or BanditArbiter(cfg.bandit, make_rng(seed, "bandit"))
    trace = EpisodeTrace.begin(seed, cfg.fingerprint(), cfg.attack.kind,
                               cfg.expert.mode)

    dt = cfg.vehicle.dt
    horizon = cfg.scenario.horizon
    shield_penalty = not cfg.train.no_shield_penalty
    takeover_ticks: set[int] = set()
    events: list[tuple[str, float]] = []
    total_reward = 0.0
    takeover_count = 0
    n_transitions = 0
    prev_u: Optional[EgoAction] = None
    pending: Optional[tuple[np.ndarray, np.ndarray, float, bool, Annotations]] = None
    outcome: Optional[EpisodeOutcome] = None

    step = 0
    while outcome is None:
        ranges = lidar_spoof(raycast_lidar(world), world, world.time_s,
                             attack_state)
        obs = build_observation(world, ranges, cfg.irs.v_floor,
                                cfg.irs.eps_closing)
        if hooks.on_observation is not None:
            hooks.on_observation(obs.vector())

        # Close out the previous tick's transition now that s' is known.
        if pending is not None and hooks.on_transition is not None:
            o_vec, u_vec, rew, done, ann = pending
            hooks.on_transition(AnnotatedTransition(
                obs=o_vec, action=u_vec, reward=rew, next_obs=obs.vector(),
                done=done, annotations=ann))
            n_transitions += 1
        pending = None

        a_policy = policy(obs, world).clamped()
        a_nominal = can_inject(a_policy, world.time_s, attack_state)
        assessment = assess(obs, ood_model, cfg.irs)

        alpha = smooth_and_authority(assessment.irs, blend_state,
                                     cfg.irs.threshold)
        if cfg.shields.disabled:
            alpha = 0.0
            blend_state.prev_alpha = 0.0
        blend_state.authority_gain = bandit.authority_gain(
            cfg.shields.gain_min, cfg.shields.gain_max,
            cfg.shields.adaptive_gain)

        track_steer = pure_pursuit_steer(world, cfg.expert.lookahead_min_m,
                                         cfg.expert.lookahead_gain)
        arm_scores = score_arms(bandit.state.theta, np.array(assessment.cues))
        shield_active = (not cfg.shields.disabled
                         and blend_state.irs_ema > cfg.irs.threshold)
        if shield_active:
            arm, probs, arm_scores = bandit.choose(
                np.array(assessment.cues), step)
            safeguarded = apply_shield(arm, a_nominal, obs, cfg.shields,
                                       track_steer)
            shield_effort = effort(a_nominal, safeguarded)
            bandit.note_effort(shield_effort)
        else:
            arm, probs = None, np.zeros(3)
            safeguarded = a_nominal
            shield_effort = 0.0

        blended = blend(a_nominal, safeguarded, alpha)
        blended = rate_limit(blended, prev_u, cfg.vehicle)

        human: Optional[EgoAction] = None
        if cfg.expert.mode == "scripted":
            _, commanded_acc = physical_controls(blended, cfg.vehicle)
            if should_takeover(world, obs, cfg.expert, expert_state,
                               alpha, commanded_acc):
                human = expert_action(world, obs, cfg.expert)
        elif cfg.expert.mode == "ui" and hooks.override_provider is not None:
            human = hooks.override_provider(step)
        u, override = resolve_override(blended, human)
        if override:
            takeover_ticks.add(step)
            takeover_count += 1
        bandit.resolve_due(step, takeover_ticks)

        s_before, _, _ = world.route.project(world.ego.x, world.ego.y)
        step_dynamics(world, u, dt)
        s_after, _, _ = world.route.project(world.ego.x, world.ego.y)
        progress = s_after - s_before

        outcome = check_termination(world, step + 1, horizon)
        violation = outcome is not None and outcome.kind in ("collision",
                                                             "off_road")
        if violation:
            events.append((outcome.kind, world.time_s))

        reward = compose_reward(progress, violation, override, assessment.irs,
                                shield_effort, cfg.reward, shield_penalty)
        total_reward += reward

        record = {
            "step": step,
            "time_s": round(world.time_s, 6),
            "x": world.ego.x, "y": world.ego.y,
            "heading": world.ego.heading, "speed": world.ego.speed,
            "yaw_rate": world.ego.yaw_rate, "phys_acc": world.ego.last_acc,
            "cues": [float(c) for c in assessment.cues],
            "irs": float(assessment.irs),
            "irs_ema": float(blend_state.irs_ema),
            "dominant": int(assessment.dominant),
            "raw": [float(x) for x in assessment.raw],
            "a_policy": [a_policy.steer, a_policy.acc],
            "a_nominal": [a_nominal.steer, a_nominal.acc],
            "shield": int(arm) if arm is not None else None,
            "alpha": float(alpha),
            "a_safeguarded": [safeguarded.steer, safeguarded.acc],
            "u": [u.steer, u.acc],
            "override": override,
            "effort": float(shield_effort),
            "arm_probs": [float(p) for p in probs],
            "arm_scores": [float(z) for z in arm_scores],
            "reward": float(reward),
            "progress": float(progress),
            "burst_active": attack_state.burst_index(world.time_s) is not None,
        }
        trace.add(record)
        if hooks.on_snapshot is not None:
            hooks.on_snapshot(_snapshot(world, obs, record))

        ann = Annotations(
            nominal=a_nominal, safeguarded=safeguarded,
            irs=float(assessment.irs), cues=assessment.cues,
            dominant=assessment.dominant,
            shield=int(arm) if arm is not None else None,
            takeover=override, shield_active=shield_active,
            alpha=float(alpha),
            outcome_tag="takeover" if override else "no_takeover")
        pending = (obs.vector(), u.as_array(), reward,
                   outcome is not None, ann)
        prev_u = u
        step += 1

    # Flush the final transition with a terminal observation.
    if pending is not None and hooks.on_transition is not None:
        final_ranges = lidar_spoof(raycast_lidar(world), world, world.time_s,
                                   attack_state)
        final_obs = build_observation(world, final_ranges, cfg.irs.v_floor,
                                      cfg.irs.eps_closing)
        o_vec, u_vec, rew, done, ann = pending
        hooks.on_transition(AnnotatedTransition(
            obs=o_vec, action=u_vec, reward=rew,
            next_obs=final_obs.vector(), done=done, annotations=ann))
        n_transitions += 1

    bandit.resolve_due(step, takeover_ticks, episode_end=True)
    trace.finish(outcome.kind, outcome.step_count, outcome.final_time_s)
    _, attacked = attack_success(events, attack_state, world.time_s)
    return EpisodeResult(outcome=outcome, trace=trace,
                         total_reward=total_reward, events=events,
                         takeover_count=takeover_count,
                         attack_succeeded=attacked,
                         transitions=n_transitions)
