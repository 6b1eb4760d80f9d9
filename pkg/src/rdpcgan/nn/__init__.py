from .layers import (
    BatchNorm,
    Conv1d,
    ConvTranspose1d,
    Dense,
    Flatten,
    Layer,
    PerSampleNorm,
    PReLU,
    Reshape,
    Sigmoid,
    Tanh,
    conv1d_backward,
    conv1d_forward,
    conv1d_transpose_backward,
    conv1d_transpose_forward,
)
from .adam import Adam, adam_step
from .checkpoint import load_params, save_params
from .network import GradSet, Network, per_example_gradients

__all__ = [
    "Adam",
    "BatchNorm",
    "Conv1d",
    "ConvTranspose1d",
    "Dense",
    "Flatten",
    "GradSet",
    "Layer",
    "Network",
    "PReLU",
    "PerSampleNorm",
    "Reshape",
    "Sigmoid",
    "Tanh",
    "adam_step",
    "conv1d_backward",
    "conv1d_forward",
    "conv1d_transpose_backward",
    "conv1d_transpose_forward",
    "load_params",
    "per_example_gradients",
    "save_params",
]
