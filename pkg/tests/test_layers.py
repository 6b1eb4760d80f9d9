"""Layer-level forward values, gradients, and the conv/transpose adjoint."""

import numpy as np
import pytest

from rdpcgan.exceptions import ShapeError
from rdpcgan.nn import layers as L

from oracles import numeric_gradient, relative_error

RNG = np.random.default_rng(2024)


def _layer_gradcheck(layer, x, tol=1e-4, step=1e-5, n_checks=6, train=True):
    """Check input and parameter grads of sum(w * layer(x)) by central FD."""
    w = RNG.normal(size=layer.forward(x, train=train).shape)

    def objective(x_=None, params=None):
        saved = {k: v.copy() for k, v in layer.params.items()}
        if params:
            for k, v in params.items():
                layer.params[k][...] = v
        value = float((layer.forward(x if x_ is None else x_, train=train) * w).sum())
        for k, v in saved.items():
            layer.params[k][...] = v
        return value

    layer.forward(x, train=train)
    dx = layer.backward(w)
    idxs = [tuple(RNG.integers(0, s) for s in x.shape) for _ in range(n_checks)]
    numeric = numeric_gradient(lambda xv: objective(x_=xv), x, idxs, step)
    for idx, num in numeric.items():
        assert relative_error(num, dx[idx]) < tol, (layer.name, "dx", idx)

    for pname, p in layer.params.items():
        layer.forward(x, train=train)
        layer.backward(w)
        grad = layer.grads[pname]
        if layer.per_example:
            grad = grad.sum(axis=0)
        for _ in range(max(2, n_checks // 2)):
            idx = tuple(RNG.integers(0, s) for s in p.shape)
            pp = p.copy()
            pp[idx] += step
            high = objective(params={pname: pp})
            pp[idx] -= 2 * step
            low = objective(params={pname: pp})
            num = (high - low) / (2 * step)
            assert relative_error(num, grad[idx]) < tol, (layer.name, pname, idx)


def test_conv1d_hand_example():
    out = L.conv1d_forward(np.array([[[1.0, 2.0, 3.0]]]), np.array([[[1.0, 1.0]]]),
                           np.zeros(1), 1, 0)
    assert np.allclose(out, [[[3.0, 5.0]]])


def test_conv1d_identity_kernel():
    x = RNG.normal(size=(2, 1, 6))
    out = L.conv1d_forward(x, np.ones((1, 1, 1)), np.zeros(1), 1, 0)
    assert np.allclose(out, x)


def test_conv1d_output_length():
    x = RNG.normal(size=(1, 2, 10))
    k = RNG.normal(size=(3, 2, 4))
    assert L.conv1d_forward(x, k, None, 2, 1).shape == (1, 3, 5)


def test_conv1d_channel_mismatch_names_dimension():
    x = RNG.normal(size=(1, 2, 8))
    k = RNG.normal(size=(3, 4, 3))
    with pytest.raises(ShapeError, match="channels"):
        L.conv1d_forward(x, k, None, 1, 0)


def test_conv1d_kernel_longer_than_input():
    with pytest.raises(ShapeError, match="shorter than kernel"):
        L.conv1d_forward(np.zeros((1, 1, 3)), np.zeros((1, 1, 5)), None, 1, 0)


def test_conv1d_gradcheck_random_shape():
    layer = L.Conv1d("c", 3, 4, 3, stride=2, padding=1, rng=RNG)
    _layer_gradcheck(layer, RNG.normal(size=(2, 3, 8)))


def test_conv_transpose_single_tap():
    out = L.conv1d_transpose_forward(np.array([[[1.0]]]), np.array([[[1.0, 2.0]]]), None, 1, 0)
    assert np.allclose(out, [[[1.0, 2.0]]])


def test_conv_transpose_stride2_upsample():
    out = L.conv1d_transpose_forward(np.array([[[1.0, 0.0]]]), np.array([[[1.0]]]), None, 2, 0)
    assert np.allclose(out, [[[1.0, 0.0, 0.0]]])


@pytest.mark.parametrize("shape,kernel,stride,pad,y_len", [
    ((2, 3, 9), (4, 3, 3), 2, 1, 4),
    ((1, 2, 6), (2, 2, 2), 1, 0, 5),
    ((3, 1, 12), (5, 1, 4), 3, 2, 5),
])
def test_conv_transpose_is_adjoint(shape, kernel, stride, pad, y_len):
    x = RNG.normal(size=shape)
    k = RNG.normal(size=kernel)
    cx = L.conv1d_forward(x, k, None, stride, pad)
    y = RNG.normal(size=cx.shape)
    lhs = float((cx * y).sum())
    rhs = float((x * L.conv1d_transpose_forward(y, k, None, stride, pad)).sum())
    assert abs(lhs - rhs) < 1e-9


def test_conv_transpose_gradcheck():
    layer = L.ConvTranspose1d("t", 3, 2, 4, stride=2, padding=1, rng=RNG)
    _layer_gradcheck(layer, RNG.normal(size=(2, 3, 5)))


def test_dense_identity_and_hand_case():
    layer = L.Dense("d", 3, 3, rng=RNG)
    layer.params["weight"][...] = np.eye(3)
    layer.params["bias"][...] = 0.0
    x = RNG.normal(size=(4, 3))
    assert np.allclose(layer.forward(x), x)
    out = L.Dense("d2", 2, 1, rng=RNG)
    out.params["weight"][...] = [[1.0, 1.0]]
    out.params["bias"][...] = [1.0]
    assert np.allclose(out.forward(np.array([[1.0, 2.0]])), [[4.0]])


def test_dense_gradcheck():
    _layer_gradcheck(L.Dense("d", 5, 3, rng=RNG), RNG.normal(size=(3, 5)))


def test_prelu_values():
    layer = L.PReLU("p", 1, init=0.25)
    out = layer.forward(np.array([[-2.0], [3.0]]))
    assert np.allclose(out, [[-0.5], [3.0]])


def test_prelu_gradcheck_per_channel():
    _layer_gradcheck(L.PReLU("p", 3), RNG.normal(size=(2, 3, 7)))
    _layer_gradcheck(L.PReLU("p2", 5), RNG.normal(size=(4, 5)))


def test_sigmoid_tanh_values_and_ranges():
    sig = L.Sigmoid("s")
    assert np.allclose(sig.forward(np.zeros((1, 1))), 0.5)
    x = RNG.normal(size=(3, 4)) * 4
    s = sig.forward(x)
    assert np.all((s > 0) & (s < 1))
    t = L.Tanh("t").forward(x)
    assert np.all((t > -1) & (t < 1))


def test_tanh_gradcheck():
    _layer_gradcheck(L.Tanh("t"), RNG.normal(size=(2, 3, 4)))
    _layer_gradcheck(L.Sigmoid("s"), RNG.normal(size=(2, 6)))


def test_per_sample_norm_constant_rows_become_zero():
    layer = L.PerSampleNorm("n", 1, epsilon=1e-5)
    out = layer.forward(np.full((3, 1, 8), 2.5))
    assert np.allclose(out, 0.0, atol=1e-6)


def test_batch_norm_two_sample_values():
    layer = L.BatchNorm("bn", 1)
    out = layer.forward(np.array([[[0.0]], [[2.0]]]), train=True)
    assert np.allclose(out.ravel(), [-1.0, 1.0], atol=1e-2)


def test_batch_norm_rejects_batch_of_one_in_training():
    layer = L.BatchNorm("bn", 2)
    with pytest.raises(ShapeError, match="batch size >= 2"):
        layer.forward(RNG.normal(size=(1, 2, 4)), train=True)
    # inference mode is fine with one example
    layer.forward(RNG.normal(size=(1, 2, 4)), train=False)


def test_norm_gradchecks():
    _layer_gradcheck(L.PerSampleNorm("ps", 3), RNG.normal(size=(2, 3, 6)))
    _layer_gradcheck(L.PerSampleNorm("ps2", 5), RNG.normal(size=(3, 5)))
    _layer_gradcheck(L.BatchNorm("bn", 3), RNG.normal(size=(4, 3, 6)))
    _layer_gradcheck(L.BatchNorm("bn2", 4), RNG.normal(size=(5, 4)))


def test_batch_norm_running_stats_used_in_eval():
    layer = L.BatchNorm("bn", 1, momentum=1.0)
    x = np.array([[[0.0]], [[2.0]]])
    layer.forward(x, train=True)
    out = layer.forward(np.array([[[1.0]]]), train=False)
    # running mean 1, running var 1 after one momentum-1 update
    assert np.allclose(out, 0.0, atol=1e-2)


def test_forward_determinism():
    layer = L.Conv1d("c", 2, 3, 3, stride=1, padding=1, rng=np.random.default_rng(4))
    x = np.random.default_rng(5).normal(size=(3, 2, 8))
    a = layer.forward(x)
    b = layer.forward(x)
    assert np.array_equal(a, b)
