"""Training orchestration: private autoencoder pre-training, private
Wasserstein GAN training, synthetic sampling, per-class supervised runs,
and architecture ablations.

The discriminator and the autoencoder are the only components that touch
real records; both train through the DP gradient path and each private
step is metered by the budget ledger. The generator trains on critic
outputs alone (post-processing), which an access audit makes checkable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .accountant import (
    DEFAULT_ORDERS,
    Accountant,
    ComposedBudget,
    DpGuarantee,
    RdpCurve,
    calibrate,
    compose_two_systems,
    rdp_to_dp,
)
from .data import Dataset, RecordSchema
from .dp import NoiseConfig, dp_gradient_step
from .exceptions import BudgetError, ConfigError, DataError
from .models import (
    ArchConfig,
    bce_per_example,
    build_decoder,
    build_discriminator,
    build_encoder,
    build_generator,
    lipschitz_enforce,
    mse_per_example,
)
from .nn.adam import Adam
from .nn.network import Network

ABLATION_VARIANTS = ("full", "no_cae", "no_ae", "no_cg", "no_cd", "no_cdcg")


@dataclass(frozen=True)
class TrainPlan:
    """Loop hyperparameters for one training run."""

    lr: float = 0.005
    batch_size: int = 64
    microbatch_size: int = 1
    n_ae: int = 0
    n_gan: int = 0
    n_d: int = 5
    weight_clip: float = 0.01
    seed: int = 0
    delta: float = 1e-5
    target_epsilon: float | None = None
    budget_split: float = 0.5
    sampling: str = "poisson"  # "fixed" keeps batch sizes exact but voids
    #                            the Poisson subsampling analysis (documented)

    def __post_init__(self):
        if self.n_d < 1:
            raise ConfigError(f"n_d={self.n_d} must be >= 1")
        if min(self.n_ae, self.n_gan) < 0:
            raise ConfigError("step counts must be >= 0")
        if self.batch_size < 1 or self.microbatch_size < 1:
            raise ConfigError("batch and microbatch sizes must be >= 1")
        if not 0.0 < self.budget_split < 1.0:
            raise ConfigError(f"budget split {self.budget_split} must be in (0, 1)")
        if self.sampling not in ("poisson", "fixed"):
            raise ConfigError(f"unknown sampling mode {self.sampling!r}")
        if self.target_epsilon is not None and self.target_epsilon <= 0:
            raise ConfigError(f"target epsilon {self.target_epsilon} must be > 0")


@dataclass
class AccessAudit:
    """Counts real-data batch reads per training phase."""

    reads: dict[str, int] = field(default_factory=dict)

    def record(self, phase: str) -> None:
        self.reads[phase] = self.reads.get(phase, 0) + 1


class BudgetLedger:
    """Live RDP totals for the autoencoder and critic mechanisms.

    Holds one accountant per mechanism on a shared order grid; the
    composed guarantee is recomputed from the step counts on demand.
    When a target is set, ``would_exceed`` vetoes the next step before it
    is taken, so the converted epsilon never passes the target.
    """

    def __init__(self, q: float, sigma_ae: float, sigma_gan: float, delta: float,
                 target_epsilon: float | None = None, orders=DEFAULT_ORDERS):
        self.q = q
        self.delta = delta
        self.target_epsilon = target_epsilon
        self.orders = tuple(float(a) for a in orders)
        self.sigma_ae = sigma_ae
        self.sigma_gan = sigma_gan
        if target_epsilon is not None:
            if sigma_ae <= 0 or sigma_gan <= 0:
                raise BudgetError("a finite privacy budget requires sigma_ae > 0 and sigma_gan > 0")
        self._ae = Accountant(q, sigma_ae, self.orders) if sigma_ae > 0 else None
        self._gan = Accountant(q, sigma_gan, self.orders) if sigma_gan > 0 else None
        self.ae_steps_taken = 0
        self.critic_steps_taken = 0
        if target_epsilon is not None and self.guarantee().epsilon > target_epsilon:
            raise BudgetError(
                f"target epsilon {target_epsilon} is below the conversion floor "
                f"{self.guarantee().epsilon:.6g} before any step")

    @property
    def tracking(self) -> bool:
        return self._ae is not None and self._gan is not None

    def record(self, mechanism: str) -> None:
        if mechanism == "ae":
            self.ae_steps_taken += 1
            if self._ae:
                self._ae.record_step()
        elif mechanism == "critic":
            self.critic_steps_taken += 1
            if self._gan:
                self._gan.record_step()
        else:
            raise ConfigError(f"unknown mechanism {mechanism!r}")

    def curve(self, ae_steps=None, critic_steps=None) -> RdpCurve | None:
        if not self.tracking:
            return None
        return self._ae.curve(ae_steps).added(self._gan.curve(critic_steps))

    def guarantee(self, ae_steps=None, critic_steps=None) -> DpGuarantee | None:
        curve = self.curve(ae_steps, critic_steps)
        return None if curve is None else rdp_to_dp(curve, self.delta)

    def composed(self) -> ComposedBudget | None:
        if not self.tracking:
            return None
        return compose_two_systems(self._ae.curve(), self._gan.curve(), self.delta)

    def would_exceed(self, mechanism: str) -> bool:
        """True if taking one more step of `mechanism` would pass the target."""
        if self.target_epsilon is None:
            return False
        ae = self.ae_steps_taken + (mechanism == "ae")
        critic = self.critic_steps_taken + (mechanism == "critic")
        return self.guarantee(ae, critic).epsilon > self.target_epsilon

    def snapshot(self) -> dict:
        g = self.guarantee()
        return {
            "q": self.q,
            "sigma_ae": self.sigma_ae,
            "sigma_gan": self.sigma_gan,
            "delta": self.delta,
            "target_epsilon": self.target_epsilon,
            "ae_steps": self.ae_steps_taken,
            "critic_steps": self.critic_steps_taken,
            "epsilon": g.epsilon if g else "infinity",
            "alpha_star": g.alpha_star if g else None,
        }


class _Sampler:
    """Draws training batches and records every real-data read."""

    def __init__(self, X: np.ndarray, plan: TrainPlan, rng: np.random.Generator,
                 audit: AccessAudit | None):
        self.X = X
        self.plan = plan
        self.rng = rng
        self.audit = audit
        self.q = min(1.0, plan.batch_size / len(X))

    def batch(self, phase: str) -> np.ndarray:
        if self.audit is not None:
            self.audit.record(phase)
        if self.plan.sampling == "poisson":
            mask = self.rng.random(len(self.X)) < self.q
            return self.X[mask]
        idx = self.rng.choice(len(self.X), size=min(self.plan.batch_size, len(self.X)),
                              replace=False)
        return self.X[idx]


def _reconstruction_loss(kind: str, mask: np.ndarray):
    per_example = bce_per_example if kind == "bce" else mse_per_example

    def loss(pred, target):
        return per_example(pred, target, mask)

    return loss


def resolve_loss_kind(kind: str, schema: RecordSchema) -> str:
    if kind == "auto":
        return "bce" if schema.all_binary() else "mse"
    if kind not in ("bce", "mse"):
        raise ConfigError(f"unknown reconstruction loss {kind!r}")
    return kind


class _JointAeNetwork(Network):
    """Encoder and decoder stacked so one DP step trains both."""

    def __init__(self, encoder: Network, decoder: Network):
        self.encoder = encoder
        self.decoder = decoder
        prefixed = []
        for net in (encoder, decoder):
            for layer in net.layers:
                layer.name = f"{net.role}/{layer.name}" \
                    if not layer.name.startswith(f"{net.role}/") else layer.name
                prefixed.append(layer)
        super().__init__("autoencoder", prefixed)


def derive_ae_steps(plan: TrainPlan, q: float, sigma_ae: float) -> int:
    """Autoencoder step count under a budget: its share of the target.

    The share is the budget_split fraction of the DP target; the ledger's
    per-step veto remains the authoritative guard during training.
    """
    share = plan.budget_split * plan.target_epsilon
    params = calibrate(share, plan.delta, q, sigma=sigma_ae)
    return params.steps if plan.n_ae == 0 else min(plan.n_ae, params.steps)


def pretrain_autoencoder(dataset: Dataset, plan: TrainPlan, noise: NoiseConfig,
                         arch: ArchConfig, *, rng: np.random.Generator,
                         ledger: BudgetLedger | None = None,
                         audit: AccessAudit | None = None,
                         loss_kind: str = "auto",
                         encoder: Network | None = None,
                         decoder: Network | None = None,
                         norm_probe=None) -> tuple[Network, Network, BudgetLedger]:
    """Private convolutional autoencoder pre-training.

    Runs n_ae DP steps of joint encoder+decoder reconstruction; under a
    budget the step count is derived from the budget split and every step
    is vetoed by the ledger first. Returns encoder, decoder, ledger.
    """
    init_rng, sample_rng, noise_rng = _child_rngs(rng, 3)
    if encoder is None:
        encoder = build_encoder(arch, init_rng)
    if decoder is None:
        decoder = build_decoder(arch, init_rng)
    joint = _JointAeNetwork(encoder, decoder)
    sampler = _Sampler(dataset.X, plan, sample_rng, audit)
    if ledger is None:
        ledger = BudgetLedger(sampler.q, noise.sigma, noise.sigma, plan.delta,
                              plan.target_epsilon)
    steps = plan.n_ae
    if plan.target_epsilon is not None:
        steps = derive_ae_steps(plan, sampler.q, noise.sigma)
    kind = resolve_loss_kind(loss_kind, dataset.schema)
    loss = _reconstruction_loss(kind, dataset.schema.mask)
    state = Adam(joint.params(), plan.lr)
    for _ in range(steps):
        if ledger.would_exceed("ae"):
            break
        batch = sampler.batch("ae")
        if len(batch) < plan.microbatch_size:
            ledger.record("ae")  # an SGM step happened even if nothing was sampled
            continue
        dp_gradient_step(joint, loss, batch, batch, noise, state, noise_rng,
                         accountant_hook=lambda: ledger.record("ae"),
                         microbatch_size=plan.microbatch_size, norm_probe=norm_probe)
    return encoder, decoder, ledger


def _critic_microbatch_grads(disc: Network, real: np.ndarray, fake: np.ndarray,
                             k: int) -> dict[str, np.ndarray]:
    """Per-microbatch critic gradients for loss mean_k D(fake) - mean_k D(real)."""
    n = real.shape[0]
    r = n // k
    scale = np.full((n, 1), 1.0 / k)
    disc.forward(fake, train=True)
    disc.backward(scale)
    g_fake = disc.per_example_grad_arrays()
    disc.forward(real, train=True)
    disc.backward(-scale)
    g_real = disc.per_example_grad_arrays()
    out = {}
    for key in g_fake:
        combined = g_fake[key] + g_real[key]
        if k > 1:
            combined = combined[:r * k].reshape((r, k) + combined.shape[1:]).sum(axis=1)
        out[key] = combined
    return out


def train_gan(dataset: Dataset, decoder: Network | None, plan: TrainPlan,
              noise: NoiseConfig, arch: ArchConfig, *, rng: np.random.Generator,
              ledger: BudgetLedger, audit: AccessAudit | None = None,
              norm_probe=None, history: list | None = None) -> tuple[Network, Network]:
    """Private 1-D convolutional WGAN training.

    Each generator iteration runs n_d private critic steps (clip, noise,
    Adam, then weight clipping) followed by one non-private generator
    step on decoded fakes. Halts cleanly when the ledger would exceed
    the budget.
    """
    from .dp import private_update

    init_rng, sample_rng, noise_rng, z_rng = _child_rngs(rng, 4)
    generator = build_generator(arch, init_rng)
    disc = build_discriminator(arch, init_rng)
    sampler = _Sampler(dataset.X, plan, sample_rng, audit)
    mask = dataset.schema.mask if dataset.schema.padding else None

    d_state = Adam(disc.params(), plan.lr)
    g_state = Adam(generator.params(), plan.lr)
    k = plan.microbatch_size

    def fake_rows(count: int) -> np.ndarray:
        z = z_rng.normal(size=(count, arch.noise_dim))
        latent = generator.forward(z, train=True)
        rows = decoder.forward(latent, train=True) if decoder is not None else latent
        return rows * mask if mask is not None else rows

    halted = False
    for _ in range(plan.n_gan):
        for _ in range(plan.n_d):
            if ledger.would_exceed("critic"):
                halted = True
                break
            real = sampler.batch("critic")
            if len(real) < k:
                ledger.record("critic")
                continue
            fake = fake_rows(len(real))
            stacked = _critic_microbatch_grads(disc, real, fake, k)
            private_update(stacked, noise, d_state, noise_rng, norm_probe)
            lipschitz_enforce(disc.params(), plan.weight_clip)
            ledger.record("critic")
        if halted:
            break
        # generator step: non-private (post-processing), no real data touched
        z = z_rng.normal(size=(plan.batch_size, arch.noise_dim))
        latent = generator.forward(z, train=True)
        rows = decoder.forward(latent, train=True) if decoder is not None else latent
        if mask is not None:
            rows = rows * mask
        disc.forward(rows, train=True)
        d_rows = disc.backward(np.full((plan.batch_size, 1), -1.0 / plan.batch_size))
        if mask is not None:
            d_rows = d_rows * mask
        d_latent = decoder.backward(d_rows) if decoder is not None else d_rows
        generator.backward(d_latent)
        g_state.step(generator.grad_set())
        if history is not None:
            history.append(_critic_estimate(disc, sampler, fake_rows, plan))
    return generator, disc


def _critic_estimate(disc, sampler, fake_rows, plan) -> float:
    """Monitoring only: mean D(fake) - mean D(real) on fresh batches."""
    real = sampler.batch("critic_monitor")
    if len(real) == 0:
        return 0.0
    fake = fake_rows(len(real))
    return float(disc.forward(fake, train=False).mean()
                 - disc.forward(real, train=False).mean())


def sample_synthetic(generator: Network, decoder: Network | None,
                     schema: RecordSchema, count: int,
                     rng: np.random.Generator, noise_dim: int = 100,
                     batch: int = 256) -> Dataset:
    """Draw synthetic records: z ~ N(0,1) -> G -> Dec -> schema domains."""
    rows = np.zeros((count, schema.input_width))
    for start in range(0, count, batch):
        z = rng.normal(size=(min(batch, count - start), noise_dim))
        latent = generator.forward(z, train=False)
        out = decoder.forward(latent, train=False) if decoder is not None else latent
        if out.shape[1] != schema.input_width:
            raise DataError(
                f"decoder emits width {out.shape[1]}, schema expects {schema.input_width}")
        rows[start:start + len(out)] = out
    rows = np.clip(rows * schema.mask, 0.0, 1.0)
    snapped = _snap_to_domains(schema, rows)
    return Dataset(schema, snapped, provenance={"kind": "synthetic"})


def _snap_to_domains(schema: RecordSchema, rows: np.ndarray) -> np.ndarray:
    """Threshold binary blocks, arg-max one-hot blocks, keep continuous."""
    out = np.zeros_like(rows)
    pos = 0
    for col in schema.feature_columns:
        block = rows[:, pos:pos + col.width]
        if col.kind == "binary":
            out[:, pos] = (block[:, 0] >= 0.5).astype(float)
        elif col.kind == "categorical":
            hot = np.argmax(block, axis=1)
            out[np.arange(len(rows)), pos + hot] = 1.0
        else:
            out[:, pos] = block[:, 0]
        pos += col.width
    return out


@dataclass
class TrainedModel:
    """One trained pipeline: all four networks plus its ledger and audit."""

    arch: ArchConfig
    encoder: Network | None
    decoder: Network | None
    generator: Network
    discriminator: Network
    ledger: BudgetLedger
    audit: AccessAudit

    def params_bundle(self) -> dict[str, np.ndarray]:
        """All tensors keyed as role/layer.param (joint-prefix aware)."""
        bundle = {}
        for net in (self.encoder, self.decoder, self.generator, self.discriminator):
            if net is None:
                continue
            prefix = f"{net.role}/"
            for key, arr in {**net.params(), **net.buffers()}.items():
                base = key[len(prefix):] if key.startswith(prefix) else key
                bundle[prefix + base] = arr
        return bundle


def train_model(dataset: Dataset, plan: TrainPlan, noise_ae: NoiseConfig,
                noise_gan: NoiseConfig, arch: ArchConfig, *,
                loss_kind: str = "auto", norm_probe=None,
                history: list | None = None) -> TrainedModel:
    """Full pipeline on one dataset: AE pre-training then WGAN training."""
    root = np.random.default_rng(plan.seed)
    ae_rng, gan_rng = _child_rngs(root, 2)
    audit = AccessAudit()
    q = min(1.0, plan.batch_size / len(dataset))
    ledger = BudgetLedger(q, noise_ae.sigma, noise_gan.sigma, plan.delta,
                          plan.target_epsilon)
    encoder = decoder = None
    if arch.use_autoencoder:
        encoder, decoder, ledger = pretrain_autoencoder(
            dataset, plan, noise_ae, arch, rng=ae_rng, ledger=ledger, audit=audit,
            loss_kind=loss_kind, norm_probe=norm_probe)
    generator, disc = train_gan(dataset, decoder, plan, noise_gan, arch,
                                rng=gan_rng, ledger=ledger, audit=audit,
                                norm_probe=norm_probe, history=history)
    return TrainedModel(arch, encoder, decoder, generator, disc, ledger, audit)


@dataclass
class SupervisedModels:
    """One model per class plus the real class prior."""

    models: dict[int, TrainedModel]
    class_counts: dict[int, int]
    schema: RecordSchema

    def max_epsilon(self) -> float | None:
        """Budget over disjoint classes composes in parallel: report the max."""
        eps = []
        for model in self.models.values():
            g = model.ledger.guarantee()
            if g is None:
                return None
            eps.append(g.epsilon)
        return max(eps)


def train_supervised(dataset: Dataset, plan: TrainPlan, noise_ae: NoiseConfig,
                     noise_gan: NoiseConfig, arch: ArchConfig,
                     loss_kind: str = "auto") -> SupervisedModels:
    """Train one pipeline per class on that class's records."""
    if dataset.labels is None:
        raise DataError("train_supervised needs a labeled dataset")
    models = {}
    counts = {}
    for cls in sorted(np.unique(dataset.labels)):
        idx = np.flatnonzero(dataset.labels == cls)
        if len(idx) < plan.batch_size:
            raise DataError(
                f"class {cls} has {len(idx)} records, fewer than one mini-batch of "
                f"{plan.batch_size}; reduce batch_size or microbatch size")
        subset = Dataset(dataset.schema, dataset.X[idx].copy(),
                         provenance={**dataset.provenance, "class": int(cls)})
        cls_plan = replace(plan, seed=plan.seed + 7919 * (int(cls) + 1))
        models[int(cls)] = train_model(subset, cls_plan, noise_ae, noise_gan, arch,
                                       loss_kind=loss_kind)
        counts[int(cls)] = len(idx)
    return SupervisedModels(models, counts, dataset.schema)


def sample_supervised(models: SupervisedModels, count: int,
                      rng: np.random.Generator) -> Dataset:
    """Sample per class in exact proportion to the real class counts."""
    total = sum(models.class_counts.values())
    classes = sorted(models.class_counts)
    counts = {c: count * models.class_counts[c] // total for c in classes}
    leftover = count - sum(counts.values())
    for c in classes:
        if leftover == 0:
            break
        counts[c] += 1
        leftover -= 1
    parts, labels = [], []
    for c in classes:
        model = models.models[c]
        ds = sample_synthetic(model.generator, model.decoder, models.schema,
                              counts[c], rng, noise_dim=model.arch.noise_dim)
        parts.append(ds.X)
        labels.append(np.full(counts[c], c, dtype=int))
    return Dataset(models.schema, np.concatenate(parts), np.concatenate(labels),
                   provenance={"kind": "synthetic", "supervised": True})


def arch_for_variant(base: ArchConfig, variant: str) -> ArchConfig:
    """Architecture switches mirroring the ablation table columns."""
    if variant not in ABLATION_VARIANTS:
        raise ConfigError(f"unknown ablation variant {variant!r}; "
                          f"choose from {ABLATION_VARIANTS}")
    if variant == "full":
        return base
    if variant == "no_cae":
        return replace(base, conv_autoencoder=False)
    if variant == "no_ae":
        return replace(base, use_autoencoder=False)
    if variant == "no_cg":
        return replace(base, conv_generator=False)
    if variant == "no_cd":
        return replace(base, conv_discriminator=False)
    return replace(base, conv_generator=False, conv_discriminator=False)


def _child_rngs(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    seeds = rng.integers(0, 2 ** 63 - 1, size=n)
    return [np.random.default_rng(int(s)) for s in seeds]
