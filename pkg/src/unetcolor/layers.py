"""Network layers with explicit reverse-mode backward passes.

Every layer owns its parameter arrays (updated in place by the optimizer),
fills a gradient dict on ``backward``, and tags each parameter with a kind
("conv", "tconv", "fc", "bn_scale", "bn_shift", ...) used by the gradient
checker to stratify its sampling. Convolution-style layers route their inner
loops through :mod:`unetcolor.kernels`.

Training forward passes cache activations for the backward; inference passes
cache nothing and use batch-norm running statistics.
"""

from __future__ import annotations

import numpy as np

from . import kernels as K


class NumericalError(RuntimeError):
    """Non-finite value encountered where the math guarantees finiteness."""


def he_fan_out_std(fan_out: int) -> float:
    """Gaussian std for ReLU-following weights, scaled by output fan."""
    return float(np.sqrt(2.0 / fan_out))


class Layer:
    """Minimal protocol: params/grads/buffers dicts plus forward/backward."""

    def params(self) -> dict:
        return {}

    def grads(self) -> dict:
        return {}

    def buffers(self) -> dict:
        return {}

    def kinds(self) -> dict:
        return {}


class Conv2d(Layer):
    def __init__(self, cin, cout, k, stride=1, pad=0, bias=False, *, rng=None,
                 dtype=np.float32, kind="conv"):
        self.stride, self.pad = stride, pad
        if rng is None:
            w = np.zeros((cout, cin, k, k), dtype=dtype)
        else:
            std = he_fan_out_std(cout * k * k)
            w = (rng.standard_normal((cout, cin, k, k)) * std).astype(dtype)
        self.weight = w
        self.bias = np.zeros(cout, dtype=dtype) if bias else None
        self.kind = kind
        self._grads = {}
        self._x = None

    def forward(self, x, train):
        self._x = x if train else None
        y = K.conv2d(x, self.weight, self.stride, self.pad)
        if self.bias is not None:
            y += self.bias[None, :, None, None]
        return y

    def backward(self, dy):
        x = self._x
        self._grads = {"weight": K.conv2d_dw(x, dy, self.stride, self.pad,
                                             self.weight.shape[2], self.weight.shape[3])}
        if self.bias is not None:
            self._grads["bias"] = dy.sum(axis=(0, 2, 3))
        return K.conv2d_dx(self.weight, dy, self.stride, self.pad, x.shape[2], x.shape[3])

    def params(self):
        p = {"weight": self.weight}
        if self.bias is not None:
            p["bias"] = self.bias
        return p

    def grads(self):
        return self._grads

    def kinds(self):
        k = {"weight": self.kind}
        if self.bias is not None:
            k["bias"] = self.kind + "_bias"
        return k


class ConvTranspose2d(Layer):
    """2x2 stride-2 learnable upsampling; weight layout (Cin, Cout, 2, 2)."""

    def __init__(self, cin, cout, *, rng=None, dtype=np.float32):
        if rng is None:
            w = np.zeros((cin, cout, 2, 2), dtype=dtype)
        else:
            std = he_fan_out_std(cout * 4)
            w = (rng.standard_normal((cin, cout, 2, 2)) * std).astype(dtype)
        self.weight = w
        self._grads = {}
        self._x = None

    def forward(self, x, train):
        self._x = x if train else None
        return K.conv_transpose2x2(x, self.weight)

    def backward(self, dy):
        self._grads = {"weight": K.conv_transpose2x2_dw(self._x, dy)}
        return K.conv_transpose2x2_dx(self.weight, dy)

    def params(self):
        return {"weight": self.weight}

    def grads(self):
        return self._grads

    def kinds(self):
        return {"weight": "tconv"}


class Linear(Layer):
    def __init__(self, cin, cout, *, rng=None, dtype=np.float32, bias=True):
        if rng is None:
            w = np.zeros((cout, cin), dtype=dtype)
        else:
            w = (rng.standard_normal((cout, cin)) * he_fan_out_std(cout)).astype(dtype)
        self.weight = w
        self.bias = np.zeros(cout, dtype=dtype) if bias else None
        self._grads = {}
        self._x = None

    def forward(self, x, train):
        self._x = x if train else None
        y = x @ self.weight.T
        if self.bias is not None:
            y += self.bias
        return y

    def backward(self, dy):
        self._grads = {"weight": dy.T @ self._x}
        if self.bias is not None:
            self._grads["bias"] = dy.sum(axis=0)
        return dy @ self.weight

    def params(self):
        p = {"weight": self.weight}
        if self.bias is not None:
            p["bias"] = self.bias
        return p

    def grads(self):
        return self._grads

    def kinds(self):
        k = {"weight": "fc"}
        if self.bias is not None:
            k["bias"] = "fc_bias"
        return k


class BatchNorm(Layer):
    """Batch normalization over (N,) or (N, H, W) per channel.

    Train mode normalizes with batch statistics (biased variance) and updates
    the running stats by EMA with factor 0.1 (unbiased variance, the usual
    convention for imported pretrained stats). Inference uses running stats.
    """

    EPS = 1e-5
    MOMENTUM = 0.1

    def __init__(self, channels, *, dtype=np.float32, scale_kind="bn_scale",
                 shift_kind="bn_shift"):
        self.weight = np.ones(channels, dtype=dtype)   # gamma
        self.bias = np.zeros(channels, dtype=dtype)    # beta
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self._scale_kind, self._shift_kind = scale_kind, shift_kind
        self._grads = {}
        self._cache = None

    @staticmethod
    def _axes(x):
        if x.ndim == 4:
            return (0, 2, 3)
        if x.ndim == 2:
            return (0,)
        raise ValueError(f"BatchNorm expects 2D or 4D input, got {x.ndim}D")

    def _expand(self, v, ndim):
        return v[None, :, None, None] if ndim == 4 else v[None, :]

    def forward(self, x, train):
        axes = self._axes(x)
        if train:
            mu = x.mean(axis=axes)
            var = x.var(axis=axes)
            inv_std = 1.0 / np.sqrt(var + self.EPS)
            xhat = (x - self._expand(mu, x.ndim)) * self._expand(inv_std, x.ndim)
            m = x.size // x.shape[1]
            var_unbiased = var * (m / (m - 1)) if m > 1 else var
            self.running_mean[...] = ((1 - self.MOMENTUM) * self.running_mean
                                      + self.MOMENTUM * mu)
            self.running_var[...] = ((1 - self.MOMENTUM) * self.running_var
                                     + self.MOMENTUM * var_unbiased)
            self._cache = (xhat, inv_std, m)
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.EPS)
            xhat = (x - self._expand(self.running_mean, x.ndim)) * self._expand(inv_std, x.ndim)
            self._cache = (xhat, inv_std, None)
        return self._expand(self.weight, x.ndim) * xhat + self._expand(self.bias, x.ndim)

    def backward(self, dy):
        xhat, inv_std, m = self._cache
        axes = self._axes(dy)
        self._grads = {
            "weight": (dy * xhat).sum(axis=axes),
            "bias": dy.sum(axis=axes),
        }
        dxhat = dy * self._expand(self.weight, dy.ndim)
        if m is None:
            # inference-mode stats are constants
            return dxhat * self._expand(inv_std, dy.ndim)
        sum_dxhat = self._expand(dxhat.sum(axis=axes), dy.ndim)
        sum_dxhat_xhat = self._expand((dxhat * xhat).sum(axis=axes), dy.ndim)
        return (self._expand(inv_std, dy.ndim) / m) * (
            m * dxhat - sum_dxhat - xhat * sum_dxhat_xhat
        )

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def grads(self):
        return self._grads

    def buffers(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def kinds(self):
        return {"weight": self._scale_kind, "bias": self._shift_kind}


class ReLU(Layer):
    def __init__(self):
        self._mask = None

    def forward(self, x, train):
        y = np.maximum(x, 0)
        self._mask = x > 0 if train else None
        return y

    def backward(self, dy):
        return dy * self._mask


class Sigmoid(Layer):
    def __init__(self):
        self._y = None

    def forward(self, x, train):
        y = 1.0 / (1.0 + np.exp(-x))
        self._y = y
        return y

    def backward(self, dy):
        y = self._y
        return dy * y * (1.0 - y)


class MaxPool2d(Layer):
    """The fixed 3x3 stride-2 pad-1 pool of the encoder entry."""

    def __init__(self):
        self._cache = None

    def forward(self, x, train):
        y, arg = K.maxpool3x3s2p1(x)
        self._cache = (arg, x.shape[2], x.shape[3]) if train else None
        return y

    def backward(self, dy):
        arg, h, w = self._cache
        return K.maxpool3x3s2p1_dx(arg, dy, h, w)


class Upsample2x(Layer):
    """Nearest-neighbor doubling used ahead of the fusion concat."""

    def forward(self, x, train):
        return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)

    def backward(self, dy):
        n, c, h, w = dy.shape
        return dy.reshape(n, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))
