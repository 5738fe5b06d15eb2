"""Soft actor-critic on the tiny dense networks.

Tanh-squashed Gaussian policy, twin critics with Polyak targets,
automatic entropy temperature, and importance-weighted updates fed by
the prioritized buffer.  All gradients are exact backprop through
`nets.Mlp`; the loss functions are deterministic given (params, batch,
noise) so they can be checked against finite differences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .config import RewardConfig, SacConfig
from .nets import Adam, Mlp, RunningNormalizer

ACTION_DIM = 2
LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
_SQUASH_EPS = 1e-6


def compose_reward(progress_m: float, violation: bool, takeover: bool,
                   irs: float, shield_effort: float, cfg: RewardConfig,
                   shield_penalty_enabled: bool = True) -> float:
    """Task progress minus explicit violation/takeover penalties, risk
    shaping, and (optionally) a shield-effort penalty."""
    r = cfg.progress_weight * progress_m
    if violation:
        r -= cfg.violation_penalty
    if takeover:
        r -= cfg.takeover_penalty
    r -= cfg.irs_shaping * irs
    if shield_penalty_enabled:
        r -= cfg.shield_effort_penalty * shield_effort
    return r


@dataclass
class ActorOut:
    mean: np.ndarray
    log_std: np.ndarray
    action: np.ndarray
    log_prob: np.ndarray                # (B,)
    noise: np.ndarray
    acts: list                          # MLP activation cache
    clip_mask: np.ndarray               # 1 where log_std inside clamp bounds


def actor_forward(actor: Mlp, obs: np.ndarray,
                  noise: Optional[np.ndarray] = None,
                  deterministic: bool = False) -> ActorOut:
    """Sample a tanh-squashed Gaussian action with its log density."""
    obs = np.atleast_2d(obs)
    out, acts = actor.forward(obs)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("actor produced non-finite outputs")
    mean, raw_log_std = out[:, :ACTION_DIM], out[:, ACTION_DIM:]
    clip_mask = ((raw_log_std > LOG_STD_MIN) & (raw_log_std < LOG_STD_MAX)
                 ).astype(float)
    log_std = np.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(log_std)
    if deterministic:
        noise = np.zeros_like(mean)
    elif noise is None:
        raise ValueError("stochastic actor_forward needs a noise sample")
    pre = mean + std * noise
    action = np.tanh(pre)
    # Gaussian log density plus tanh change-of-variables correction.
    log_prob = np.sum(
        -0.5 * noise ** 2 - 0.5 * math.log(2 * math.pi) - log_std
        - np.log(1.0 - action ** 2 + _SQUASH_EPS),
        axis=1)
    return ActorOut(mean, log_std, action, log_prob, noise, acts, clip_mask)


def critic_loss_and_grads(critic: Mlp, obs: np.ndarray, act: np.ndarray,
                          target: np.ndarray, weights: np.ndarray,
                          ) -> tuple[float, list[np.ndarray], np.ndarray]:
    """Weighted MSE toward a fixed target; returns per-sample TD errors."""
    x = np.concatenate([obs, act], axis=1)
    q, acts = critic.forward(x)
    q = q[:, 0]
    td = q - target
    loss = float(np.mean(weights * td ** 2))
    dq = (2.0 * weights * td / len(td))[:, None]
    d_w, d_b, _ = critic.backward(acts, dq)
    return loss, d_w + d_b, td


def critic_action_grad(critic: Mlp, obs: np.ndarray,
                       act: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Q values and dQ/da for the actor update (critic params frozen)."""
    x = np.concatenate([obs, act], axis=1)
    q, acts = critic.forward(x)
    _, _, dx = critic.backward(acts, np.ones_like(q))
    return q[:, 0], dx[:, obs.shape[1]:]


def actor_loss_and_grads(actor: Mlp, critic1: Mlp, critic2: Mlp,
                         obs: np.ndarray, noise: np.ndarray, temperature: float,
                         weights: np.ndarray,
                         ) -> tuple[float, list[np.ndarray], np.ndarray]:
    """mean(w * (temp * logp - min Q(s, a))) with reparameterized actions."""
    out = actor_forward(actor, obs, noise=noise)
    a, log_std, logp = out.action, out.log_std, out.log_prob
    std = np.exp(log_std)
    q1, g1 = critic_action_grad(critic1, obs, a)
    q2, g2 = critic_action_grad(critic2, obs, a)
    use1 = (q1 <= q2)[:, None]
    q_min = np.where(use1[:, 0], q1, q2)
    dq_da = np.where(use1, g1, g2)
    loss = float(np.mean(weights * (temperature * logp - q_min)))

    scale = (weights / len(weights))[:, None]
    dlogp_da = 2.0 * a / (1.0 - a ** 2 + _SQUASH_EPS)
    d_da = scale * (temperature * dlogp_da - dq_da)       # dL/da
    d_pre = d_da * (1.0 - a ** 2)                         # through tanh
    d_mean = d_pre
    d_log_std = (d_pre * std * out.noise
                 - scale * temperature) * out.clip_mask
    dout = np.concatenate([d_mean, d_log_std], axis=1)
    d_w, d_b, _ = actor.backward(out.acts, dout)
    return loss, d_w + d_b, logp


def temperature_loss_and_grad(log_temp: float, log_prob: np.ndarray,
                              weights: np.ndarray,
                              target_entropy: float) -> tuple[float, float]:
    """Drive temperature so weighted mean entropy approaches the target."""
    gap = log_prob + target_entropy
    loss = float(np.mean(weights * (-log_temp) * gap))
    grad = float(np.mean(weights * (-gap)))
    return loss, grad


class SacLearner:
    """Owns networks, optimizers, temperature, and the update rule."""

    def __init__(self, obs_dim: int, cfg: SacConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.obs_dim = obs_dim
        h = cfg.hidden
        self.actor = Mlp([obs_dim, h, h, 2 * ACTION_DIM], rng)
        self.critic1 = Mlp([obs_dim + ACTION_DIM, h, h, 1], rng)
        self.critic2 = Mlp([obs_dim + ACTION_DIM, h, h, 1], rng)
        self.target1 = Mlp([obs_dim + ACTION_DIM, h, h, 1], rng)
        self.target2 = Mlp([obs_dim + ACTION_DIM, h, h, 1], rng)
        self.target1.copy_from(self.critic1)
        self.target2.copy_from(self.critic2)
        self.log_temp = math.log(cfg.init_temperature)
        self.opt_actor = Adam(cfg.lr)
        self.opt_c1 = Adam(cfg.lr)
        self.opt_c2 = Adam(cfg.lr)
        self.opt_temp = Adam(cfg.lr)
        self.normalizer = RunningNormalizer(obs_dim)
        self.step_count = 0
        self.skipped_batches = 0

    @property
    def temperature(self) -> float:
        return math.exp(self.log_temp)

    def act(self, obs_vec: np.ndarray, rng: np.random.Generator,
            deterministic: bool = False) -> np.ndarray:
        x = self.normalizer.normalize(obs_vec)[None, :]
        if deterministic:
            out = actor_forward(self.actor, x, deterministic=True)
        else:
            noise = rng.standard_normal((1, ACTION_DIM))
            out = actor_forward(self.actor, x, noise=noise)
        return out.action[0]

    def update(self, obs: np.ndarray, act: np.ndarray, rew: np.ndarray,
               next_obs: np.ndarray, done: np.ndarray, weights: np.ndarray,
               rng: np.random.Generator) -> tuple[dict, np.ndarray]:
        """One SAC gradient step; returns (losses, |td| for priority refresh)."""
        cfg = self.cfg
        obs_n = self.normalizer.normalize(obs)
        next_n = self.normalizer.normalize(next_obs)
        batch = len(obs)

        noise_next = rng.standard_normal((batch, ACTION_DIM))
        nxt = actor_forward(self.actor, next_n, noise=noise_next)
        q1t, _ = self.target1.forward(np.concatenate([next_n, nxt.action], axis=1))
        q2t, _ = self.target2.forward(np.concatenate([next_n, nxt.action], axis=1))
        q_next = np.minimum(q1t[:, 0], q2t[:, 0]) - self.temperature * nxt.log_prob
        y = rew + cfg.discount * (1.0 - done) * q_next

        l1, g1, td1 = critic_loss_and_grads(self.critic1, obs_n, act, y, weights)
        l2, g2, td2 = critic_loss_and_grads(self.critic2, obs_n, act, y, weights)
        noise_new = rng.standard_normal((batch, ACTION_DIM))
        la, ga, logp = actor_loss_and_grads(self.actor, self.critic1,
                                            self.critic2, obs_n, noise_new,
                                            self.temperature, weights)
        lt, gt = temperature_loss_and_grad(self.log_temp, logp, weights,
                                           cfg.target_entropy)
        losses = {"critic1": l1, "critic2": l2, "actor": la, "temperature": lt}
        if not all(math.isfinite(v) for v in losses.values()):
            self.skipped_batches += 1
            return losses, np.abs(td1)

        self.opt_c1.step(self.critic1.params(), g1)
        self.opt_c2.step(self.critic2.params(), g2)
        self.opt_actor.step(self.actor.params(), ga)
        box = [np.array([self.log_temp])]
        self.opt_temp.step(box, [np.array([gt])])
        self.log_temp = float(box[0][0])

        rho = cfg.target_smoothing
        self.target1.polyak_from(self.critic1, rho)
        self.target2.polyak_from(self.critic2, rho)
        self.step_count += 1
        return losses, 0.5 * (np.abs(td1) + np.abs(td2))

    # -- checkpointing ----------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "format": "riskdrive-checkpoint",
            "version": 1,
            "obs_dim": self.obs_dim,
            "cfg": self.cfg.__dict__,
            "actor": self.actor.state_dict(),
            "critic1": self.critic1.state_dict(),
            "critic2": self.critic2.state_dict(),
            "target1": self.target1.state_dict(),
            "target2": self.target2.state_dict(),
            "log_temp": self.log_temp,
            "step_count": self.step_count,
            "normalizer": self.normalizer.state_dict(),
            "optimizers": {
                "actor": self.opt_actor.state_dict(),
                "c1": self.opt_c1.state_dict(),
                "c2": self.opt_c2.state_dict(),
                "temp": self.opt_temp.state_dict(),
            },
        }

    def save(self, path: str | Path, extra: dict | None = None) -> None:
        payload = self.state_dict()
        if extra:
            payload["extra"] = extra
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def load(cls, path: str | Path,
             rng: np.random.Generator | None = None) -> tuple["SacLearner", dict]:
        payload = json.loads(Path(path).read_text())
        if payload.get("format") != "riskdrive-checkpoint":
            raise ValueError(f"{path}: not a learner checkpoint")
        cfg = SacConfig(**payload["cfg"])
        learner = cls(payload["obs_dim"], cfg,
                      rng or np.random.default_rng(0))
        for name in ("actor", "critic1", "critic2", "target1", "target2"):
            setattr(learner, name, Mlp.from_state(payload[name]))
        learner.log_temp = payload["log_temp"]
        learner.step_count = payload["step_count"]
        learner.normalizer = RunningNormalizer.from_state(payload["normalizer"])
        opts = payload["optimizers"]
        learner.opt_actor.load_state(opts["actor"])
        learner.opt_c1.load_state(opts["c1"])
        learner.opt_c2.load_state(opts["c2"])
        learner.opt_temp.load_state(opts["temp"])
        return learner, payload.get("extra", {})
