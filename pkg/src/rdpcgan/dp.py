"""Differentially private gradient machinery.

Per-microbatch clipping bounds each record's influence to an L2 ball of
radius C; Gaussian noise with per-coordinate standard deviation sigma*C
is added to every clipped contribution before averaging. The reference
semantics draw one independent noise tensor per microbatch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ShapeError
from .nn.adam import Adam
from .nn.network import GradSet, Network


@dataclass(frozen=True)
class NoiseConfig:
    """Clipping bound and noise multiplier for one private mechanism."""

    clip: float
    sigma: float
    target: str = "autoencoder"  # or "discriminator"

    def __post_init__(self):
        if self.clip <= 0:
            raise ConfigError(f"clip bound C={self.clip} must be > 0")
        if self.sigma < 0:
            raise ConfigError(f"noise multiplier sigma={self.sigma} must be >= 0")
        if self.target not in ("autoencoder", "discriminator"):
            raise ConfigError(f"unknown noise target {self.target!r}")


def clip_gradients(grads: GradSet, clip: float) -> GradSet:
    """Scale a gradient set to global L2 norm at most ``clip``."""
    norm = grads.global_l2_norm
    if not np.isfinite(norm):
        raise ShapeError("cannot clip gradients with a non-finite norm")
    factor = 1.0 / max(1.0, norm / clip)
    return grads if factor == 1.0 else grads.scaled(factor)


def _clip_factors(stacked: dict[str, np.ndarray], clip: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-microbatch scale factors bounding each global L2 norm by clip."""
    some = next(iter(stacked.values()))
    n = some.shape[0]
    sq = np.zeros(n)
    for v in stacked.values():
        sq += (v * v).reshape(n, -1).sum(axis=1)
    norms = np.sqrt(sq)
    if not np.all(np.isfinite(norms)):
        raise ShapeError("cannot clip gradients with a non-finite norm")
    return 1.0 / np.maximum(1.0, norms / clip), norms


def clip_stacked(stacked: dict[str, np.ndarray], clip: float) -> tuple[list[GradSet], np.ndarray]:
    """Clip per-example stacked gradients; returns (clipped list, clipped norms).

    Equivalent to clipping each example's GradSet separately, but the
    norms are computed in one vectorized pass.
    """
    factors, norms = _clip_factors(stacked, clip)
    scaled = {k: v * factors.reshape((-1,) + (1,) * (v.ndim - 1)) for k, v in stacked.items()}
    n = len(factors)
    clipped = [GradSet({k: v[i] for k, v in scaled.items()}) for i in range(n)]
    return clipped, norms * factors


def private_update(stacked: dict[str, np.ndarray], noise: NoiseConfig, state,
                   rng: np.random.Generator, norm_probe=None) -> GradSet:
    """Vectorized clip + noise + Adam step on stacked microbatch gradients.

    Noise uses the single-draw form: one N(0, sigma^2 C^2 r) tensor per
    parameter added to the clipped sum equals r independent per-microbatch
    draws in distribution. The aggregate (mean over microbatches) is fed
    to the optimizer state.
    """
    factors, norms = _clip_factors(stacked, noise.clip)
    if norm_probe is not None:
        norm_probe(norms * factors)
    r = len(factors)
    aggregate = {}
    for key, v in stacked.items():
        total = (v * factors.reshape((-1,) + (1,) * (v.ndim - 1))).sum(axis=0)
        if noise.sigma > 0:
            total += rng.normal(0.0, noise.sigma * noise.clip * np.sqrt(r), size=total.shape)
        aggregate[key] = total / r
    grads = GradSet(aggregate)
    state.step(grads)
    return grads


def noisy_aggregate(clipped: list[GradSet], sigma: float, clip: float,
                    rng: np.random.Generator) -> GradSet:
    """Mean over microbatches of (clipped gradient + N(0, sigma^2 C^2 I))."""
    if not clipped:
        raise ShapeError("noisy_aggregate needs at least one microbatch")
    keys = list(clipped[0].values)
    r = len(clipped)
    total = {k: clipped[0].values[k].astype(float, copy=True) for k in keys}
    for g in clipped[1:]:
        for k in keys:
            total[k] += g.values[k]
    if sigma > 0:
        scale = sigma * clip
        for _ in range(r):
            for k in keys:
                total[k] += rng.normal(0.0, scale, size=total[k].shape)
    return GradSet({k: v / r for k, v in total.items()})


def dp_gradient_step(network: Network, loss_fn, batch_x: np.ndarray,
                     batch_target: np.ndarray, noise: NoiseConfig, state: Adam,
                     rng: np.random.Generator, accountant_hook=None,
                     microbatch_size: int = 1, norm_probe=None) -> None:
    """One private update: per-example grads -> clip -> noise -> Adam.

    Microbatches of size k group k consecutive examples; leftovers when k
    does not divide the batch are dropped from the step. The accountant
    hook fires exactly once per call.
    """
    n = batch_x.shape[0]
    k = microbatch_size
    if k < 1:
        raise ConfigError(f"microbatch size {k} must be >= 1")
    r = n // k
    if r == 0:
        raise ShapeError(f"batch of {n} examples is smaller than one microbatch of {k}")

    pred = network.forward(batch_x, train=True)
    _, dpred = loss_fn(pred, batch_target)
    network.backward(dpred)
    stacked = network.per_example_grad_arrays()

    if k > 1:
        # microbatch loss is the mean over its k examples
        stacked = {key: v[:r * k].reshape((r, k) + v.shape[1:]).mean(axis=1)
                   for key, v in stacked.items()}
    private_update(stacked, noise, state, rng, norm_probe)
    if accountant_hook is not None:
        accountant_hook()
