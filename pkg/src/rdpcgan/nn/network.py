"""Sequential network container, gradient sets, per-example gradients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ShapeError
from .layers import Layer


@dataclass
class GradSet:
    """Named gradient arrays mirroring a parameter set."""

    values: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def global_l2_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(v * v)) for v in self.values.values())))

    def scaled(self, factor: float) -> "GradSet":
        return GradSet({k: v * factor for k, v in self.values.items()})


class Network:
    """Ordered stack of layers with a role tag.

    ``forward`` caches activations layer by layer; ``backward`` propagates
    an output gradient and leaves per-example parameter gradients on each
    layer. All parameters live in the layers; ``params()`` exposes them
    as a flat ``"layer.param"`` dict of live arrays.
    """

    def __init__(self, role: str, layers: list[Layer]):
        self.role = role
        self.layers = layers
        names = [l.name for l in layers]
        if len(set(names)) != len(names):
            raise ShapeError(f"duplicate layer names in {role}: {names}")

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def params(self) -> dict[str, np.ndarray]:
        out = {}
        for layer in self.layers:
            for pname, arr in layer.params.items():
                out[f"{layer.name}.{pname}"] = arr
        return out

    def buffers(self) -> dict[str, np.ndarray]:
        out = {}
        for layer in self.layers:
            for bname, arr in layer.buffers.items():
                out[f"{layer.name}.{bname}"] = arr
        return out

    def set_params(self, values: dict[str, np.ndarray]) -> None:
        """Assign parameter (and buffer) arrays by name, checking shapes."""
        own = self.params()
        bufs = self.buffers()
        for key, arr in values.items():
            if key in own:
                target = own[key]
            elif key in bufs:
                target = bufs[key]
            else:
                raise ShapeError(f"{self.role} has no parameter {key!r}")
            if target.shape != arr.shape:
                raise ShapeError(
                    f"{self.role}.{key} has shape {target.shape}, checkpoint entry {arr.shape}")
            target[...] = arr

    def grad_set(self) -> GradSet:
        """Gradients of the total objective (per-example grads summed)."""
        values = {}
        for layer in self.layers:
            for pname in layer.params:
                g = layer.grads[pname]
                if layer.per_example:
                    g = g.sum(axis=0)
                values[f"{layer.name}.{pname}"] = g
        return GradSet(values)

    def per_example_grad_arrays(self) -> dict[str, np.ndarray]:
        """Per-example gradients as ``name -> (batch, *param_shape)``."""
        values = {}
        for layer in self.layers:
            for pname in layer.params:
                if not layer.per_example:
                    raise ShapeError(
                        f"layer {layer.name} ({type(layer).__name__}) has no per-example "
                        "gradients; use a per-sample normalization on private paths")
                values[f"{layer.name}.{pname}"] = layer.grads[pname]
        return values

    def check_finite_grads(self) -> None:
        for layer in self.layers:
            for pname, g in layer.grads.items():
                if not np.all(np.isfinite(g)):
                    raise ShapeError(f"non-finite gradient in {layer.name}.{pname}")


def per_example_gradients(network: Network, loss_fn, batch_x: np.ndarray,
                          batch_target: np.ndarray) -> list[GradSet]:
    """Gradient of each example's own loss, one GradSet per example.

    ``loss_fn(pred, target)`` must return ``(per_example_losses, dpred)``
    where ``dpred[i]`` is the gradient of example i's loss with respect to
    its own prediction row. The mean over the returned list equals the
    gradient of the mean loss.
    """
    if batch_x.shape[0] == 0:
        raise ShapeError("per_example_gradients requires a nonempty batch")
    pred = network.forward(batch_x, train=True)
    _, dpred = loss_fn(pred, batch_target)
    network.backward(dpred)
    stacked = network.per_example_grad_arrays()
    n = batch_x.shape[0]
    return [GradSet({k: v[i] for k, v in stacked.items()}) for i in range(n)]
