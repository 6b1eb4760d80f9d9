"""Network container and per-example gradient semantics."""

import numpy as np
import pytest

from rdpcgan.exceptions import ShapeError
from rdpcgan.models import bce_per_example, mse_per_example
from rdpcgan.nn import (
    BatchNorm,
    Dense,
    Network,
    PerSampleNorm,
    PReLU,
    Sigmoid,
    per_example_gradients,
)

RNG = np.random.default_rng(99)


def _small_net(norm="per_sample"):
    rng = np.random.default_rng(7)
    layers = [Dense("fc1", 6, 5, rng=rng), PReLU("act1", 5)]
    if norm == "per_sample":
        layers.append(PerSampleNorm("norm1", 5))
    elif norm == "batch":
        layers.append(BatchNorm("norm1", 5))
    layers += [Dense("fc2", 5, 6, rng=rng), Sigmoid("out")]
    return Network("test", layers)


def test_identical_examples_identical_gradsets():
    net = _small_net()
    row = RNG.normal(size=(1, 6))
    batch = np.repeat(row, 4, axis=0)
    target = np.tile((RNG.random(6) < 0.5).astype(float), (4, 1))
    grads = per_example_gradients(net, bce_per_example, batch, target)
    for g in grads[1:]:
        for key in g.values:
            assert np.allclose(g.values[key], grads[0].values[key], atol=1e-12)


def test_mean_of_per_example_equals_full_batch_gradient():
    net = _small_net()
    x = RNG.normal(size=(5, 6))
    target = (RNG.random((5, 6)) < 0.5).astype(float)
    grads = per_example_gradients(net, bce_per_example, x, target)
    mean = {k: np.mean([g.values[k] for g in grads], axis=0) for k in grads[0].values}

    def mean_loss(pred, tgt):
        losses, dpred = bce_per_example(pred, tgt)
        return losses, dpred / len(losses)

    net.forward(x, train=True)
    pred = net.forward(x, train=True)
    _, dpred = mean_loss(pred, target)
    net.backward(dpred)
    full = net.grad_set()
    for key in full.values:
        assert np.allclose(full.values[key], mean[key], atol=1e-9)


def test_per_example_matches_single_example_loop_oracle():
    net = _small_net()
    x = RNG.normal(size=(6, 6))
    target = (RNG.random((6, 6)) < 0.5).astype(float)
    batched = per_example_gradients(net, mse_per_example, x, target)
    for i in range(len(x)):
        single = per_example_gradients(net, mse_per_example, x[i:i + 1], target[i:i + 1])[0]
        for key in single.values:
            assert np.allclose(batched[i].values[key], single.values[key], atol=1e-12), key


def test_batch_norm_blocks_per_example_gradients():
    net = _small_net(norm="batch")
    x = RNG.normal(size=(4, 6))
    target = (RNG.random((4, 6)) < 0.5).astype(float)
    with pytest.raises(ShapeError, match="per-example"):
        per_example_gradients(net, bce_per_example, x, target)


def test_empty_batch_rejected():
    net = _small_net()
    with pytest.raises(ShapeError, match="nonempty"):
        per_example_gradients(net, bce_per_example, np.zeros((0, 6)), np.zeros((0, 6)))


def test_grad_set_global_norm():
    net = _small_net()
    x = RNG.normal(size=(3, 6))
    target = (RNG.random((3, 6)) < 0.5).astype(float)
    pred = net.forward(x, train=True)
    _, dpred = bce_per_example(pred, target)
    net.backward(dpred)
    gs = net.grad_set()
    manual = np.sqrt(sum(float((v ** 2).sum()) for v in gs.values.values()))
    assert abs(gs.global_l2_norm - manual) <= 1e-9 * max(1.0, manual)


def test_set_params_shape_check():
    net = _small_net()
    with pytest.raises(ShapeError, match="shape"):
        net.set_params({"fc1.weight": np.zeros((2, 2))})
    with pytest.raises(ShapeError, match="no parameter"):
        net.set_params({"nope.weight": np.zeros((2, 2))})


def test_duplicate_layer_names_rejected():
    rng = np.random.default_rng(0)
    with pytest.raises(ShapeError, match="duplicate"):
        Network("bad", [Dense("fc", 2, 2, rng=rng), Dense("fc", 2, 2, rng=rng)])
