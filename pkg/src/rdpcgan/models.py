"""Concrete architectures and loss functions.

Four networks share one backbone recipe: a five-layer 1-D conv stack that
shrinks the input width to spatial length 1 through four kernel-4
stride-2 halvings plus one full-width tail convolution (widths must be
multiples of 16). Transposed stacks mirror it exactly. PReLU everywhere
except the contracted output activations: Tanh on the encoder and
generator outputs, Sigmoid on the decoder output, nothing after the
discriminator's final dense unit.

Per-sample normalization is the default on everything trained with
per-example gradients; the generator, which trains non-privately on full
mini-batches, defaults to batch normalization. Ablation variants swap a
conv stack for a width-matched dense stack with the same layer count.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ConfigError, ShapeError
from .nn.layers import (
    BatchNorm,
    Conv1d,
    ConvTranspose1d,
    Dense,
    Flatten,
    PerSampleNorm,
    PReLU,
    Reshape,
    Sigmoid,
    Tanh,
)
from .nn.network import Network

HALVING_LAYERS = 4
WIDTH_UNIT = 2 ** HALVING_LAYERS  # conv widths must be multiples of this

NORM_KINDS = ("none", "per_sample", "batch")


@dataclass(frozen=True)
class ArchConfig:
    input_width: int
    channels: tuple[int, ...] = (32, 64, 128, 256, 512)
    latent_dim: int = 128
    noise_dim: int = 100
    encoder_norm: str = "per_sample"
    decoder_norm: str = "per_sample"
    generator_norm: str = "batch"
    discriminator_norm: str = "per_sample"
    conv_autoencoder: bool = True
    conv_generator: bool = True
    conv_discriminator: bool = True
    use_autoencoder: bool = True

    def __post_init__(self):
        if len(self.channels) != 5:
            raise ConfigError(f"channel schedule needs 5 entries, got {len(self.channels)}")
        for width, label in ((self.input_width, "input_width"), (self.latent_dim, "latent_dim")):
            if width < WIDTH_UNIT or width % WIDTH_UNIT:
                raise ConfigError(f"{label}={width} must be a multiple of {WIDTH_UNIT}")
        for kind in (self.encoder_norm, self.decoder_norm,
                     self.generator_norm, self.discriminator_norm):
            if kind not in NORM_KINDS:
                raise ConfigError(f"unknown normalization kind {kind!r}")

    def conv_plan(self, width: int) -> list[tuple[int, int, int]]:
        """(kernel, stride, padding) per layer taking `width` down to 1."""
        plan = [(4, 2, 1)] * HALVING_LAYERS
        plan.append((width // WIDTH_UNIT, 1, 0))
        return plan

    @property
    def generator_out_width(self) -> int:
        return self.latent_dim if self.use_autoencoder else self.input_width


def _norm(kind: str, name: str, channels: int):
    if kind == "per_sample":
        return [PerSampleNorm(name, channels)]
    if kind == "batch":
        return [BatchNorm(name, channels)]
    return []


def _conv_down_stack(width, channels_out, norm_kind, rng):
    """Five conv layers contracting (1, width) to (channels_out[-1], 1).

    Normalization sits on the middle layers only; activations are left to
    the caller so encoder and discriminator can differ on the last layer.
    """
    plan = zip([1] + list(channels_out[:-1]), channels_out)
    layers = [Reshape("in", (1, width))]
    layout = [(4, 2, 1)] * HALVING_LAYERS + [(width // WIDTH_UNIT, 1, 0)]
    for i, ((cin, cout), (k, s, p)) in enumerate(zip(plan, layout), start=1):
        layers.append(Conv1d(f"conv{i}", cin, cout, k, s, p, rng=rng))
        if 2 <= i <= HALVING_LAYERS:
            layers += _norm(norm_kind, f"norm{i}", cout)
        if i < len(layout):
            layers.append(PReLU(f"act{i}", cout))
    return layers


def _conv_up_stack(in_dim, out_width, channels_up, norm_kind, rng):
    """Five transposed conv layers expanding (in_dim, 1) to (1, out_width)."""
    chans = list(channels_up) + [1]
    layers = [Reshape("in", (in_dim, 1))]
    layout = [(out_width // WIDTH_UNIT, 1, 0)] + [(4, 2, 1)] * HALVING_LAYERS
    cin = in_dim
    for i, (cout, (k, s, p)) in enumerate(zip(chans, layout), start=1):
        layers.append(ConvTranspose1d(f"tconv{i}", cin, cout, k, s, p, rng=rng))
        if 2 <= i <= HALVING_LAYERS:
            layers += _norm(norm_kind, f"norm{i}", cout)
        if i < len(layout):
            layers.append(PReLU(f"act{i}", cout))
        cin = cout
    return layers


def _dense_stack(dims, norm_kind, rng, last_act=None):
    layers = []
    n = len(dims) - 1
    for i in range(1, n + 1):
        layers.append(Dense(f"fc{i}", dims[i - 1], dims[i], rng=rng))
        if 2 <= i <= n - 1:
            layers += _norm(norm_kind, f"norm{i}", dims[i])
        if i < n:
            layers.append(PReLU(f"act{i}", dims[i]))
    return layers


def build_encoder(cfg: ArchConfig, rng) -> Network:
    c = cfg.channels
    if cfg.conv_autoencoder:
        layers = _conv_down_stack(cfg.input_width, (*c[:4], cfg.latent_dim),
                                  cfg.encoder_norm, rng)
        layers += [Tanh("act5"), Flatten("out")]
    else:
        dims = (cfg.input_width, *c[:4], cfg.latent_dim)
        layers = _dense_stack(dims, cfg.encoder_norm, rng)
        layers.append(Tanh("act5"))
    return Network("encoder", layers)


def build_decoder(cfg: ArchConfig, rng) -> Network:
    c = cfg.channels
    if cfg.conv_autoencoder:
        layers = _conv_up_stack(cfg.latent_dim, cfg.input_width, (c[3], c[2], c[1], c[0]),
                                cfg.decoder_norm, rng)
        layers += [Sigmoid("act5"), Flatten("out")]
    else:
        dims = (cfg.latent_dim, c[3], c[2], c[1], c[0], cfg.input_width)
        layers = _dense_stack(dims, cfg.decoder_norm, rng)
        layers.append(Sigmoid("act5"))
    return Network("decoder", layers)


def build_generator(cfg: ArchConfig, rng) -> Network:
    c = cfg.channels
    out_width = cfg.generator_out_width
    # without an autoencoder the generator emits data-space rows in [0, 1]
    final = Tanh("act5") if cfg.use_autoencoder else Sigmoid("act5")
    if cfg.conv_generator:
        layers = _conv_up_stack(cfg.noise_dim, out_width, (c[3], c[2], c[1], c[0]),
                                cfg.generator_norm, rng)
        layers += [final, Flatten("out")]
    else:
        dims = (cfg.noise_dim, c[3], c[2], c[1], c[0], out_width)
        layers = _dense_stack(dims, cfg.generator_norm, rng)
        layers.append(final)
    return Network("generator", layers)


def build_discriminator(cfg: ArchConfig, rng) -> Network:
    c = cfg.channels
    if cfg.conv_discriminator:
        layers = _conv_down_stack(cfg.input_width, c, cfg.discriminator_norm, rng)
        layers += [PReLU("act5", c[4]), Flatten("mid"),
                   Dense("dense", c[4], 1, rng=rng)]
    else:
        dims = (cfg.input_width, *c)
        layers = _dense_stack(dims, cfg.discriminator_norm, rng)
        layers += [PReLU("act5", c[4]), Dense("dense", c[4], 1, rng=rng)]
    return Network("discriminator", layers)


# ---------------------------------------------------------------------------
# losses

BCE_CLAMP = 1e-7


def _check_same_shape(x, xhat):
    if x.shape != xhat.shape:
        raise ShapeError(f"loss arguments differ in shape: {x.shape} vs {xhat.shape}")


def bce_loss(x: np.ndarray, xhat: np.ndarray) -> float:
    """Binary cross entropy, averaged over every element.

    Predictions are clamped to [BCE_CLAMP, 1 - BCE_CLAMP] so targets hit
    exactly 0/1 without infinities.
    """
    _check_same_shape(x, xhat)
    p = np.clip(xhat, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(-(x * np.log(p) + (1.0 - x) * np.log1p(-p)).mean())


def mse_loss(x: np.ndarray, xhat: np.ndarray) -> float:
    _check_same_shape(x, xhat)
    return float(np.mean((x - xhat) ** 2))


def bce_per_example(xhat, x, mask=None):
    """Per-row BCE and the gradient of each row's own loss w.r.t. xhat."""
    _check_same_shape(x, xhat)
    p = np.clip(xhat, BCE_CLAMP, 1.0 - BCE_CLAMP)
    elem = -(x * np.log(p) + (1.0 - x) * np.log1p(-p))
    grad = (p - x) / (p * (1.0 - p))
    if mask is not None:
        elem = elem * mask
        grad = grad * mask
        m = float(mask.sum())
    else:
        m = x.shape[1]
    return elem.sum(axis=1) / m, grad / m


def mse_per_example(xhat, x, mask=None):
    _check_same_shape(x, xhat)
    diff = xhat - x
    if mask is not None:
        diff = diff * mask
        m = float(mask.sum())
    else:
        m = x.shape[1]
    return (diff * diff).sum(axis=1) / m, 2.0 * diff / m


def critic_loss(disc: Network, real: np.ndarray, fake: np.ndarray) -> float:
    """Critic objective to *descend*: mean D(fake) - mean D(real)."""
    if real.shape[0] != fake.shape[0]:
        raise ShapeError(f"critic batches differ in size: {real.shape[0]} vs {fake.shape[0]}")
    return float(disc.forward(fake, train=False).mean()
                 - disc.forward(real, train=False).mean())


def generator_loss(disc: Network, decoder: Network | None, generator: Network,
                   z: np.ndarray) -> float:
    """Generator objective to descend: -mean D(Dec(G(z)))."""
    fake = generator.forward(z, train=False)
    if decoder is not None:
        fake = decoder.forward(fake, train=False)
    return float(-disc.forward(fake, train=False).mean())


def lipschitz_enforce(params: dict[str, np.ndarray], clip_c: float) -> dict[str, np.ndarray]:
    """Clamp every weight into [-clip_c, clip_c] in place (WGAN critic)."""
    if clip_c <= 0:
        raise ConfigError(f"weight clip {clip_c} must be > 0")
    for arr in params.values():
        np.clip(arr, -clip_c, clip_c, out=arr)
    return params
