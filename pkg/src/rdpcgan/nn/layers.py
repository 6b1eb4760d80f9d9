"""Layers for a small deterministic 1-D network engine.

Everything is float64 numpy. Each layer caches what its backward pass
needs during forward; backward fills ``self.grads`` with *per-example*
parameter gradients (leading batch axis) so that a single batched pass
yields exact per-record gradients for DP clipping. Batch normalization
is the one exception: it couples examples, so it only provides gradients
summed over the batch and is flagged ``per_example = False``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..exceptions import ShapeError


def _windows(x: np.ndarray, length_out: int, kernel: int, stride: int) -> np.ndarray:
    """Read-only strided view of all kernel windows: (b, c, length_out, kernel)."""
    b, c, _ = x.shape
    sb, sc, sl = x.strides
    return as_strided(
        x,
        shape=(b, c, length_out, kernel),
        strides=(sb, sc, sl * stride, sl),
        writeable=False,
    )


def conv1d_forward(x, kernel, bias=None, stride=1, padding=0):
    """Cross-correlate x (b, c_in, len) with kernel (c_out, c_in, k)."""
    if x.ndim != 3:
        raise ShapeError(f"conv1d input must be 3-d (batch, channels, length), got {x.shape}")
    b, ci, length = x.shape
    co, ci_k, k = kernel.shape
    if ci_k != ci:
        raise ShapeError(f"conv1d kernel expects {ci_k} input channels, input has {ci}")
    if length + 2 * padding < k:
        raise ShapeError(f"conv1d length {length} + 2*{padding} padding is shorter than kernel {k}")
    length_out = (length + 2 * padding - k) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding))) if padding else x
    win = _windows(xp, length_out, k, stride)
    flat = win.transpose(0, 2, 1, 3).reshape(b, length_out, ci * k)
    y = (flat @ kernel.reshape(co, ci * k).T).transpose(0, 2, 1)
    if bias is not None:
        y = y + bias[:, None]
    return np.ascontiguousarray(y)


def conv1d_backward(x, kernel, stride, padding, dy):
    """Gradients of conv1d: returns (dx, dw per example, db per example)."""
    b, ci, length = x.shape
    co, _, k = kernel.shape
    length_out = dy.shape[2]
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding))) if padding else x
    win = _windows(xp, length_out, k, stride)
    flat = win.transpose(0, 2, 1, 3).reshape(b, length_out, ci * k)
    dw = np.matmul(dy, flat).reshape(b, co, ci, k)
    db = dy.sum(axis=2)
    # scatter T[b, l, c, k] = sum_o dy[b, o, l] W[o, c, k] back onto the input
    t = np.matmul(dy.transpose(0, 2, 1), kernel.reshape(co, ci * k)).reshape(b, length_out, ci, k)
    dxp = np.zeros_like(xp)
    span = stride * (length_out - 1) + 1
    for kk in range(k):
        dxp[:, :, kk:kk + span:stride] += t[:, :, :, kk].transpose(0, 2, 1)
    dx = dxp[:, :, padding:padding + length] if padding else dxp
    return dx, dw, db


def conv1d_transpose_forward(x, kernel, bias=None, stride=1, padding=0):
    """Transposed (fractionally strided) conv: kernel (c_in, c_out, k).

    Output length is (len - 1) * stride - 2 * padding + k. With a shared
    kernel array this is the exact adjoint of :func:`conv1d_forward`.
    """
    if x.ndim != 3:
        raise ShapeError(f"conv1d_transpose input must be 3-d, got {x.shape}")
    b, ci, length = x.shape
    ci_k, co, k = kernel.shape
    if ci_k != ci:
        raise ShapeError(f"conv1d_transpose kernel expects {ci_k} input channels, input has {ci}")
    length_full = (length - 1) * stride + k
    length_out = length_full - 2 * padding
    if length_out < 1:
        raise ShapeError(f"conv1d_transpose output length {length_out} < 1 (padding too large)")
    t = np.matmul(x.transpose(0, 2, 1), kernel.reshape(ci, co * k)).reshape(b, length, co, k)
    y_full = np.zeros((b, co, length_full))
    span = stride * (length - 1) + 1
    for kk in range(k):
        y_full[:, :, kk:kk + span:stride] += t[:, :, :, kk].transpose(0, 2, 1)
    y = np.ascontiguousarray(y_full[:, :, padding:padding + length_out])
    if bias is not None:
        y += bias[:, None]
    return y


def conv1d_transpose_backward(x, kernel, stride, padding, dy):
    """Gradients of conv1d_transpose: (dx, dw per example, db per example)."""
    b, ci, length = x.shape
    _, co, k = kernel.shape
    dy_full = np.pad(dy, ((0, 0), (0, 0), (padding, padding))) if padding else dy
    win = _windows(dy_full, length, k, stride)
    flat = win.transpose(0, 2, 1, 3).reshape(b, length, co * k)
    dx = np.ascontiguousarray(np.matmul(flat, kernel.reshape(ci, co * k).T).transpose(0, 2, 1))
    dw = np.matmul(x, flat).reshape(b, ci, co, k)
    db = dy.sum(axis=2)
    return dx, dw, db


class Layer:
    """Base layer. Subclasses fill ``grads`` with per-example arrays."""

    per_example = True

    def __init__(self, name: str):
        self.name = name
        self.params: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool = True) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class Conv1d(Layer):
    def __init__(self, name, in_ch, out_ch, kernel, stride=1, padding=0, *, rng):
        super().__init__(name)
        self.stride = stride
        self.padding = padding
        scale = (in_ch * kernel) ** -0.5
        self.params = {
            "weight": rng.normal(0.0, scale, size=(out_ch, in_ch, kernel)),
            "bias": np.zeros(out_ch),
        }

    def forward(self, x, train=True):
        self._x = x
        return conv1d_forward(x, self.params["weight"], self.params["bias"],
                              self.stride, self.padding)

    def backward(self, dy):
        dx, dw, db = conv1d_backward(self._x, self.params["weight"],
                                     self.stride, self.padding, dy)
        self.grads = {"weight": dw, "bias": db}
        return dx


class ConvTranspose1d(Layer):
    def __init__(self, name, in_ch, out_ch, kernel, stride=1, padding=0, *, rng):
        super().__init__(name)
        self.stride = stride
        self.padding = padding
        scale = (in_ch * kernel) ** -0.5
        self.params = {
            "weight": rng.normal(0.0, scale, size=(in_ch, out_ch, kernel)),
            "bias": np.zeros(out_ch),
        }

    def forward(self, x, train=True):
        self._x = x
        return conv1d_transpose_forward(x, self.params["weight"], self.params["bias"],
                                        self.stride, self.padding)

    def backward(self, dy):
        dx, dw, db = conv1d_transpose_backward(self._x, self.params["weight"],
                                               self.stride, self.padding, dy)
        self.grads = {"weight": dw, "bias": db}
        return dx


class Dense(Layer):
    def __init__(self, name, in_dim, out_dim, *, rng):
        super().__init__(name)
        self.params = {
            "weight": rng.normal(0.0, in_dim ** -0.5, size=(out_dim, in_dim)),
            "bias": np.zeros(out_dim),
        }

    def forward(self, x, train=True):
        if x.ndim != 2:
            raise ShapeError(f"dense input must be 2-d (batch, features), got {x.shape}")
        if x.shape[1] != self.params["weight"].shape[1]:
            raise ShapeError(
                f"dense layer {self.name} expects {self.params['weight'].shape[1]} features, "
                f"input has {x.shape[1]}")
        self._x = x
        return x @ self.params["weight"].T + self.params["bias"]

    def backward(self, dy):
        self.grads = {
            "weight": np.einsum("bo,bi->boi", dy, self._x),
            "bias": dy,
        }
        return dy @ self.params["weight"]


class PReLU(Layer):
    """Parametric ReLU with one learnable slope per channel."""

    def __init__(self, name, channels, init=0.25):
        super().__init__(name)
        self.params = {"slope": np.full(channels, float(init))}

    def _slope(self, ndim):
        s = self.params["slope"]
        return s[:, None] if ndim == 3 else s

    def forward(self, x, train=True):
        self._x = x
        self._pos = x > 0
        return np.where(self._pos, x, self._slope(x.ndim) * x)

    def backward(self, dy):
        neg = dy * np.where(self._pos, 0.0, self._x)
        dslope = neg.sum(axis=2) if dy.ndim == 3 else neg
        self.grads = {"slope": dslope}
        return dy * np.where(self._pos, 1.0, self._slope(dy.ndim))


class Tanh(Layer):
    def forward(self, x, train=True):
        self._y = np.tanh(x)
        return self._y

    def backward(self, dy):
        return dy * (1.0 - self._y ** 2)


class Sigmoid(Layer):
    def forward(self, x, train=True):
        self._y = 1.0 / (1.0 + np.exp(-x))
        return self._y

    def backward(self, dy):
        return dy * self._y * (1.0 - self._y)


class PerSampleNorm(Layer):
    """Normalize each example over all of its features, then scale/shift
    per channel. Keeps per-example gradients exact (no cross-example
    coupling), which batch norm cannot offer."""

    def __init__(self, name, channels, epsilon=1e-5):
        super().__init__(name)
        self.epsilon = epsilon
        self.params = {"scale": np.ones(channels), "shift": np.zeros(channels)}

    def forward(self, x, train=True):
        self._flat = x.ndim == 2
        x3 = x[:, :, None] if self._flat else x
        mu = x3.mean(axis=(1, 2), keepdims=True)
        var = x3.var(axis=(1, 2), keepdims=True)
        self._inv_std = 1.0 / np.sqrt(var + self.epsilon)
        self._xhat = (x3 - mu) * self._inv_std
        y = self.params["scale"][:, None] * self._xhat + self.params["shift"][:, None]
        return y[:, :, 0] if self._flat else y

    def backward(self, dy):
        dy3 = dy[:, :, None] if self._flat else dy
        self.grads = {
            "scale": (dy3 * self._xhat).sum(axis=2),
            "shift": dy3.sum(axis=2),
        }
        g = dy3 * self.params["scale"][:, None]
        g_mean = g.mean(axis=(1, 2), keepdims=True)
        gx_mean = (g * self._xhat).mean(axis=(1, 2), keepdims=True)
        dx = self._inv_std * (g - g_mean - self._xhat * gx_mean)
        return dx[:, :, 0] if self._flat else dx


class BatchNorm(Layer):
    """Batch normalization over the batch (and spatial) axes per channel.

    Couples examples in training mode, so per-example gradients are not
    defined; ``grads`` holds batch-summed gradients instead. Training
    mode requires batch size >= 2.
    """

    per_example = False

    def __init__(self, name, channels, epsilon=1e-5, momentum=0.1):
        super().__init__(name)
        self.epsilon = epsilon
        self.momentum = momentum
        self.params = {"scale": np.ones(channels), "shift": np.zeros(channels)}
        self.buffers = {"running_mean": np.zeros(channels), "running_var": np.ones(channels)}

    def forward(self, x, train=True):
        self._flat = x.ndim == 2
        x3 = x[:, :, None] if self._flat else x
        self._train = train
        if train:
            if x3.shape[0] < 2:
                raise ShapeError(
                    f"batch norm {self.name} needs batch size >= 2 in training mode, got {x3.shape[0]}")
            mu = x3.mean(axis=(0, 2))
            var = x3.var(axis=(0, 2))
            m = self.momentum
            self.buffers["running_mean"] = (1 - m) * self.buffers["running_mean"] + m * mu
            self.buffers["running_var"] = (1 - m) * self.buffers["running_var"] + m * var
        else:
            mu = self.buffers["running_mean"]
            var = self.buffers["running_var"]
        self._inv_std = 1.0 / np.sqrt(var + self.epsilon)
        self._xhat = (x3 - mu[:, None]) * self._inv_std[:, None]
        y = self.params["scale"][:, None] * self._xhat + self.params["shift"][:, None]
        return y[:, :, 0] if self._flat else y

    def backward(self, dy):
        dy3 = dy[:, :, None] if self._flat else dy
        self.grads = {
            "scale": (dy3 * self._xhat).sum(axis=(0, 2)),
            "shift": dy3.sum(axis=(0, 2)),
        }
        g = dy3 * self.params["scale"][:, None]
        if self._train:
            g_mean = g.mean(axis=(0, 2), keepdims=True)
            gx_mean = (g * self._xhat).mean(axis=(0, 2), keepdims=True)
            dx = self._inv_std[:, None] * (g - g_mean - self._xhat * gx_mean)
        else:
            dx = self._inv_std[:, None] * g
        return dx[:, :, 0] if self._flat else dx


class Reshape(Layer):
    """Reshape (batch, *) to (batch,) + shape; parameter free."""

    def __init__(self, name, shape):
        super().__init__(name)
        self.shape = tuple(shape)

    def forward(self, x, train=True):
        self._in_shape = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, dy):
        return dy.reshape(self._in_shape)


class Flatten(Layer):
    def __init__(self, name="flatten"):
        super().__init__(name)

    def forward(self, x, train=True):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._in_shape)
