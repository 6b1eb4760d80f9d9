"""Differentially private synthetic data generation.

A Rényi-DP accountant for the Sampled Gaussian Mechanism, a small
deterministic 1-D convolutional network engine with exact per-example
gradients, DP-SGD style clipping and noising, a privately pre-trained
convolutional autoencoder bridging discrete records into a continuous
latent space, a private Wasserstein GAN over that space, and an
evaluation harness (MMD, dimension-wise prediction, TSTR).
"""

from .accountant import (
    DEFAULT_ORDERS,
    Accountant,
    ComposedBudget,
    DpGuarantee,
    RdpCurve,
    SgmParams,
    calibrate,
    compose_steps,
    compose_two_systems,
    rdp_to_dp,
    sgm_rdp_curve,
    sgm_rdp_step,
)
from .data import Column, Dataset, RecordSchema, export_csv, load_csv, make_toy_dataset, split
from .dp import NoiseConfig, clip_gradients, dp_gradient_step, noisy_aggregate
from .exceptions import BudgetError, ConfigError, DataError, RdpcganError, ShapeError
from .models import (
    ArchConfig,
    bce_loss,
    build_decoder,
    build_discriminator,
    build_encoder,
    build_generator,
    critic_loss,
    generator_loss,
    lipschitz_enforce,
    mse_loss,
)
from .training import (
    AccessAudit,
    BudgetLedger,
    SupervisedModels,
    TrainedModel,
    TrainPlan,
    arch_for_variant,
    pretrain_autoencoder,
    sample_supervised,
    sample_synthetic,
    train_gan,
    train_model,
    train_supervised,
)

__version__ = "0.1.0"
