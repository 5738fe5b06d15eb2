"""Risk-prioritized replay: sum-tree sampling over powered priorities.

Priorities add |TD error|, a risk-score term, and a takeover bonus, with
a floor so nominal experience keeps nonzero mass.  Sampling is
with-replacement proportional to p^beta with max-normalized importance
weights.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .config import ReplayConfig
from .world import EgoAction


@dataclass
class Annotations:
    nominal: EgoAction
    safeguarded: EgoAction
    irs: float
    cues: tuple[float, float, float]
    dominant: int
    shield: Optional[int]
    takeover: bool
    shield_active: bool
    alpha: float
    outcome_tag: str                    # no_takeover | takeover


@dataclass
class AnnotatedTransition:
    obs: np.ndarray
    action: np.ndarray                  # executed control u
    reward: float
    next_obs: np.ndarray
    done: bool
    annotations: Annotations


class SumTree:
    """Binary indexed tree over leaf priorities for O(log N) sampling."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.tree = np.zeros(2 * capacity)

    def set(self, idx: int, value: float) -> None:
        i = idx + self.capacity
        delta = value - self.tree[i]
        while i >= 1:
            self.tree[i] += delta
            i //= 2

    def get(self, idx: int) -> float:
        return float(self.tree[idx + self.capacity])

    @property
    def total(self) -> float:
        return float(self.tree[1])

    def find(self, mass: float) -> int:
        """Leaf index whose cumulative interval contains `mass`."""
        i = 1
        while i < self.capacity:
            left = 2 * i
            if mass <= self.tree[left] or self.tree[left + 1] <= 0.0:
                i = left
            else:
                mass -= self.tree[left]
                i = left + 1
        return i - self.capacity


def compute_priority(td_error: float, irs: float, takeover: bool,
                     cfg: ReplayConfig) -> float:
    p = abs(td_error) + cfg.irs_coef * irs + cfg.takeover_coef * float(takeover)
    return max(p, cfg.priority_floor)


class ReplayBuffer:
    """Ring buffer with powered-priority sampling and priority refresh."""

    def __init__(self, cfg: ReplayConfig):
        self.cfg = cfg
        self.data: list[Optional[AnnotatedTransition]] = [None] * cfg.capacity
        self.tree = SumTree(cfg.capacity)
        self.raw_priority = np.zeros(cfg.capacity)
        self.insert_counter = 0
        self.size = 0
        self.stale_skips = 0

    def __len__(self) -> int:
        return self.size

    def insert(self, t: AnnotatedTransition, initial_td: float = 0.0) -> int:
        slot = self.insert_counter % self.cfg.capacity
        self.data[slot] = t
        p = compute_priority(initial_td, t.annotations.irs,
                             t.annotations.takeover, self.cfg)
        self.raw_priority[slot] = p
        self.tree.set(slot, p ** self.cfg.priority_power)
        self.insert_counter += 1
        self.size = min(self.size + 1, self.cfg.capacity)
        return self.insert_counter - 1

    def _slot(self, insert_index: int) -> Optional[int]:
        if insert_index >= self.insert_counter:
            return None
        if self.insert_counter - insert_index > self.cfg.capacity:
            return None  # evicted
        return insert_index % self.cfg.capacity

    def sample(self, n: int, beta_is: float,
               rng: np.random.Generator) -> tuple[list[AnnotatedTransition],
                                                  np.ndarray, np.ndarray]:
        """Draw n transitions with replacement; returns (batch, weights, slots)."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        if self.size < n:
            raise ValueError(f"buffer holds {self.size} < batch {n}")
        total = self.tree.total
        slots = np.empty(n, dtype=int)
        probs = np.empty(n)
        for i in range(n):
            mass = rng.uniform(0.0, total)
            slot = self.tree.find(mass)
            if self.data[slot] is None:
                # Float-edge landing on an empty leaf; snap to a filled slot.
                slot = self.size - 1
            slots[i] = slot
            probs[i] = self.tree.get(slot) / total
        weights = (self.size * probs) ** (-beta_is)
        weights = weights / weights.max()
        batch = [self.data[s] for s in slots]
        return batch, weights, slots

    def update_priorities(self, slots: np.ndarray,
                          new_td_errors: np.ndarray) -> None:
        for slot, td in zip(slots, new_td_errors):
            t = self.data[int(slot)]
            if t is None:
                self.stale_skips += 1
                continue
            p = compute_priority(float(td), t.annotations.irs,
                                 t.annotations.takeover, self.cfg)
            self.raw_priority[int(slot)] = p
            self.tree.set(int(slot), p ** self.cfg.priority_power)

    def save(self, path: str | Path) -> None:
        payload = {
            "format": "riskdrive-replay",
            "version": 1,
            "cfg": self.cfg,
            "data": self.data[:self.size] if self.size < self.cfg.capacity
                    else self.data,
            "raw_priority": self.raw_priority,
            "insert_counter": self.insert_counter,
            "size": self.size,
        }
        with open(path, "wb") as f:
            pickle.dump(payload, f)

    @classmethod
    def load(cls, path: str | Path) -> "ReplayBuffer":
        with open(path, "rb") as f:
            payload = pickle.load(f)
        if payload.get("format") != "riskdrive-replay":
            raise ValueError(f"{path}: not a replay snapshot")
        buf = cls(payload["cfg"])
        for i, t in enumerate(payload["data"]):
            if t is None:
                continue
            buf.data[i] = t
        buf.raw_priority = payload["raw_priority"]
        buf.insert_counter = payload["insert_counter"]
        buf.size = payload["size"]
        for i in range(min(buf.size, buf.cfg.capacity)):
            buf.tree.set(i, buf.raw_priority[i] ** buf.cfg.priority_power)
        return buf
