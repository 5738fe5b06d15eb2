"""Tiny dense networks with hand-written backprop and Adam.

Networks are small tanh MLPs, so exact gradients are cheap to derive and
can be validated against finite differences without an autodiff
dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class Mlp:
    """Fully connected net: tanh hidden layers, linear output."""

    def __init__(self, sizes: list[int], rng: np.random.Generator):
        self.sizes = list(sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns (output, activation cache including the input)."""
        acts = [x]
        h = x
        for i in range(self.n_layers):
            z = h @ self.weights[i] + self.biases[i]
            h = np.tanh(z) if i < self.n_layers - 1 else z
            acts.append(h)
        return h, acts

    def backward(self, acts: list[np.ndarray], dout: np.ndarray,
                 ) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
        """Gradients (dW, db) per layer plus gradient w.r.t. the input."""
        d_w = [None] * self.n_layers
        d_b = [None] * self.n_layers
        grad = dout
        for i in reversed(range(self.n_layers)):
            if i < self.n_layers - 1:
                grad = grad * (1.0 - acts[i + 1] ** 2)
            d_w[i] = acts[i].T @ grad
            d_b[i] = grad.sum(axis=0)
            grad = grad @ self.weights[i].T
        return d_w, d_b, grad

    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def copy_from(self, other: "Mlp") -> None:
        self.weights = [w.copy() for w in other.weights]
        self.biases = [b.copy() for b in other.biases]

    def polyak_from(self, other: "Mlp", rho: float) -> None:
        for tgt, src in zip(self.weights, other.weights):
            tgt *= rho
            tgt += (1 - rho) * src
        for tgt, src in zip(self.biases, other.biases):
            tgt *= rho
            tgt += (1 - rho) * src

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params())

    def state_dict(self) -> dict:
        return {"sizes": self.sizes,
                "weights": [w.tolist() for w in self.weights],
                "biases": [b.tolist() for b in self.biases]}

    @classmethod
    def from_state(cls, state: dict) -> "Mlp":
        net = cls.__new__(cls)
        net.sizes = state["sizes"]
        net.weights = [np.array(w) for w in state["weights"]]
        net.biases = [np.array(b) for b in state["biases"]]
        return net


@dataclass
class Adam:
    """Adaptive moment estimation over a flat list of parameter arrays."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        bc1 = 1 - self.beta1 ** self.t
        bc2 = 1 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def state_dict(self) -> dict:
        return {"t": self.t,
                "m": [a.tolist() for a in self.m],
                "v": [a.tolist() for a in self.v]}

    def load_state(self, state: dict) -> None:
        self.t = state["t"]
        self.m = [np.array(a) for a in state["m"]]
        self.v = [np.array(a) for a in state["v"]]


class RunningNormalizer:
    """Running mean/variance for observation normalization (frozen at eval)."""

    def __init__(self, dim: int):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.ones(dim)
        self.frozen = False

    def update(self, x: np.ndarray) -> None:
        if self.frozen:
            return
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def normalize(self, x: np.ndarray) -> np.ndarray:
        var = self.m2 / max(self.count, 2)
        return (x - self.mean) / np.sqrt(var + 1e-6)

    def state_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean.tolist(),
                "m2": self.m2.tolist()}

    @classmethod
    def from_state(cls, state: dict) -> "RunningNormalizer":
        norm = cls(len(state["mean"]))
        norm.count = state["count"]
        norm.mean = np.array(state["mean"])
        norm.m2 = np.array(state["m2"])
        return norm
