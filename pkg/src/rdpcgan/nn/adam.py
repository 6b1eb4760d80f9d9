"""Adam optimizer over named parameter dicts."""

from __future__ import annotations

import numpy as np

from ..exceptions import ShapeError
from .network import GradSet


class Adam:
    """Standard Adam with bias correction; updates parameters in place."""

    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: GradSet) -> None:
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in self.params.items():
            g = grads.values[name]
            if not np.all(np.isfinite(g)):
                raise ShapeError(f"non-finite gradient for {name}")
            if g.shape != p.shape:
                raise ShapeError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)


def adam_step(params: dict[str, np.ndarray], grads: GradSet, state: Adam, lr: float) -> None:
    """One Adam update with an explicit learning rate."""
    if state.params is not params:
        raise ShapeError("Adam state was built for a different parameter set")
    state.lr = lr
    state.step(grads)
