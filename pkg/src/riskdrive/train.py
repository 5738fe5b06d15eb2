"""Training loop: interaction bursts with the full shielded pipeline
alternating with off-policy gradient steps from the prioritized buffer.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .bandit import BanditArbiter
from .config import RunConfig
from .episode import EpisodeHooks, EpisodeResult, run_episode
from .replay import ReplayBuffer
from .risk import OodModel
from .sac import SacLearner
from .world import OBS_DIM, EgoAction, make_rng

log = logging.getLogger("riskdrive.train")


@dataclass
class TrainStats:
    ticks: int = 0
    episodes: int = 0
    grad_steps: int = 0
    tsv_train: int = 0
    takeovers: int = 0
    failed_episodes: int = 0
    checkpoints: list[str] = field(default_factory=list)
    episode_returns: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"ticks": self.ticks, "episodes": self.episodes,
                "grad_steps": self.grad_steps, "tsv_train": self.tsv_train,
                "takeovers": self.takeovers,
                "failed_episodes": self.failed_episodes,
                "checkpoints": self.checkpoints,
                "episode_returns": self.episode_returns}


def learner_policy(learner: SacLearner, rng: np.random.Generator,
                   deterministic: bool = False):
    def policy(obs, world) -> EgoAction:
        a = learner.act(obs.vector(), rng, deterministic=deterministic)
        return EgoAction(float(a[0]), float(a[1]))
    return policy


def train_loop(cfg: RunConfig, seed: int, workdir: Path,
               ood_model: Optional[OodModel] = None,
               learner: Optional[SacLearner] = None,
               ) -> tuple[SacLearner, BanditArbiter, TrainStats]:
    """Alternate episode collection with gradient bursts; checkpoint on
    the configured tick cadence."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    rng_policy = make_rng(seed, "policy")
    rng_learn = np.random.default_rng(np.random.SeedSequence((seed, 100)))
    learner = learner or SacLearner(OBS_DIM, cfg.sac, rng_learn)
    bandit = BanditArbiter(cfg.bandit, make_rng(seed, "bandit"))
    buffer = ReplayBuffer(cfg.replay)
    stats = TrainStats()
    tc = cfg.train
    next_ckpt = tc.checkpoint_every

    def save_checkpoint(tag: str) -> None:
        path = workdir / f"checkpoint_{tag}.json"
        learner.save(path, extra={"bandit": bandit.state.to_dict(),
                                  "seed": seed, "ticks": stats.ticks})
        stats.checkpoints.append(str(path))

    episode_seed = seed * 100_000
    while stats.ticks < tc.total_ticks:
        remaining = tc.total_ticks - stats.ticks
        ep_cfg = cfg
        if remaining < cfg.scenario.horizon:
            ep_cfg = copy.deepcopy(cfg)
            ep_cfg.scenario.horizon = remaining

        hooks = EpisodeHooks(
            on_transition=lambda t: buffer.insert(t, initial_td=1.0),
            on_observation=learner.normalizer.update,
        )
        try:
            result: EpisodeResult = run_episode(
                ep_cfg, episode_seed, learner_policy(learner, rng_policy),
                ood_model=ood_model, bandit=bandit, hooks=hooks)
        except Exception:
            log.exception("episode %d failed; skipping", episode_seed)
            stats.failed_episodes += 1
            episode_seed += 1
            continue
        episode_seed += 1

        ep_ticks = result.outcome.step_count
        stats.ticks += ep_ticks
        stats.episodes += 1
        stats.episode_returns.append(result.total_reward)
        stats.tsv_train += len(result.events)
        stats.takeovers += result.takeover_count

        # Gradient burst proportional to the interaction burst.
        n_updates = int(round(tc.grad_steps * ep_ticks / tc.rollout_ticks))
        if (len(buffer) >= max(cfg.sac.batch_size, cfg.sac.learning_starts)):
            frac = min(stats.ticks / max(tc.total_ticks, 1), 1.0)
            beta_is = cfg.replay.is_exponent0 + frac * (
                cfg.replay.is_exponent_final - cfg.replay.is_exponent0)
            for _ in range(n_updates):
                batch, weights, slots = buffer.sample(
                    cfg.sac.batch_size, beta_is, rng_learn)
                obs = np.stack([t.obs for t in batch])
                act = np.stack([t.action for t in batch])
                rew = np.array([t.reward for t in batch])
                nxt = np.stack([t.next_obs for t in batch])
                done = np.array([float(t.done) for t in batch])
                _, td = learner.update(obs, act, rew, nxt, done, weights,
                                       rng_learn)
                buffer.update_priorities(slots, td)
                stats.grad_steps += 1

        while stats.ticks >= next_ckpt:
            save_checkpoint(str(next_ckpt))
            next_ckpt += tc.checkpoint_every

    save_checkpoint("final")
    return learner, bandit, stats
