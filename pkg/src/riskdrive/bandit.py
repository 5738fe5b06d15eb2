"""Contextual bandit over the three shields.

Per-arm linear scores on the cue vector, softmax selection with an
annealed temperature, and delayed success-minus-effort feedback that
nudges only the chosen arm's weights.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import BanditConfig
from .shields import ShieldKind

N_ARMS = 3
CONTEXT_DIM = 3


@dataclass
class PendingFeedback:
    issued_tick: int
    arm: ShieldKind
    context: np.ndarray
    effort: float
    resolved: bool = False


@dataclass
class BanditState:
    theta: np.ndarray                   # (3 arms, 3 context dims)
    temperature: float
    cfg: BanditConfig
    pending: list[PendingFeedback] = field(default_factory=list)
    recent_feedback: deque = field(default_factory=lambda: deque(maxlen=50))

    @classmethod
    def fresh(cls, cfg: BanditConfig) -> "BanditState":
        return cls(theta=np.zeros((N_ARMS, CONTEXT_DIM)),
                   temperature=cfg.temperature0, cfg=cfg)

    def to_dict(self) -> dict:
        return {"theta": self.theta.tolist(), "temperature": self.temperature}

    def load_dict(self, data: dict) -> None:
        self.theta = np.array(data["theta"])
        self.temperature = float(data["temperature"])


def score_arms(theta: np.ndarray, context: np.ndarray) -> np.ndarray:
    return theta @ np.asarray(context, float)


def softmax_probs(z: np.ndarray, temperature: float) -> np.ndarray:
    x = np.asarray(z, float) / temperature
    x = x - x.max()
    e = np.exp(x)
    return e / e.sum()


def select_arm(z: np.ndarray, temperature: float,
               rng: np.random.Generator) -> tuple[ShieldKind, np.ndarray]:
    p = softmax_probs(z, temperature)
    k = int(rng.choice(N_ARMS, p=p))
    return ShieldKind(k), p


def resolve_feedback(pending: PendingFeedback, takeover_within: bool,
                     effort_coef: float) -> float:
    if pending.resolved:
        raise RuntimeError("feedback resolved twice")
    pending.resolved = True
    success = 0.0 if takeover_within else 1.0
    return success - effort_coef * pending.effort


def update_arm(theta: np.ndarray, arm: ShieldKind, context: np.ndarray,
               feedback: float, learning_rate: float) -> np.ndarray:
    """Nudge only the chosen arm's weights toward the context."""
    out = theta.copy()
    out[int(arm)] = out[int(arm)] + learning_rate * feedback * context
    return out


def anneal(temperature: float, factor: float, floor: float = 0.1) -> float:
    return max(temperature * factor, floor)


class BanditArbiter:
    """Stateful wrapper used by the episode loop."""

    def __init__(self, cfg: BanditConfig, rng: np.random.Generator,
                 state: Optional[BanditState] = None):
        self.cfg = cfg
        self.rng = rng
        self.state = state or BanditState.fresh(cfg)

    def choose(self, context: np.ndarray, tick: int,
               effort_value: float = 0.0) -> tuple[ShieldKind, np.ndarray, np.ndarray]:
        """Select a shield for this tick, registering pending feedback."""
        if self.cfg.fixed_shield is not None:
            k = ShieldKind[self.cfg.fixed_shield.upper()]
            z = score_arms(self.state.theta, context)
            p = np.eye(N_ARMS)[int(k)]
            return k, p, z
        z = score_arms(self.state.theta, context)
        k, p = select_arm(z, self.state.temperature, self.rng)
        self.state.pending.append(PendingFeedback(
            issued_tick=tick, arm=k, context=np.asarray(context, float).copy(),
            effort=effort_value))
        self.state.temperature = anneal(self.state.temperature,
                                        self.cfg.anneal_factor,
                                        self.cfg.temperature_floor)
        return k, p, z

    def note_effort(self, effort_value: float) -> None:
        if self.state.pending:
            self.state.pending[-1].effort = effort_value

    def resolve_due(self, tick: int, takeover_ticks: set[int],
                    episode_end: bool = False) -> None:
        """Resolve feedback whose horizon elapsed (or everything at episode end)."""
        horizon = self.cfg.feedback_horizon_ticks
        still = []
        for pf in self.state.pending:
            due = episode_end or tick >= pf.issued_tick + horizon
            if not due:
                still.append(pf)
                continue
            end = min(tick, pf.issued_tick + horizon)
            took = any(t in takeover_ticks
                       for t in range(pf.issued_tick + 1, end + 1))
            f = resolve_feedback(pf, took, self.cfg.effort_coef)
            self.state.theta = update_arm(self.state.theta, pf.arm, pf.context,
                                          f, self.cfg.learning_rate)
            self.state.recent_feedback.append(f)
        self.state.pending = still

    def authority_gain(self, gain_min: float, gain_max: float,
                       adaptive: bool) -> float:
        if not adaptive or not self.state.recent_feedback:
            return 1.0
        mean_f = float(np.mean(self.state.recent_feedback))
        gain = 1.0 + 0.5 * np.tanh(mean_f - 0.5)
        return float(min(max(gain, gain_min), gain_max))
