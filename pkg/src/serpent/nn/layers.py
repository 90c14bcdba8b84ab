"""Network layers with exact analytic backward passes.

Convention: activations are float64 arrays, (batch, length, channels) for the
convolutional part and (batch, features) after flattening.  Each layer caches
what its backward pass needs on forward; backward returns the gradient with
respect to the layer input and fills the layer's parameter gradients.

Dropout draws its mask from a SplitMix64 stream keyed by (seed, layer_id,
epoch, batch), so a forward pass is a pure function of its TrainContext and
training runs are replayable draw-for-draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from serpent.errors import DegenerateBatch, ShapeMismatch
from serpent.rng import SplitMix64


@dataclass(frozen=True)
class TrainContext:
    """Per-call mode flags; (seed, epoch, batch) key all stochastic layers."""

    train: bool = False
    epoch: int = 0
    batch: int = 0
    seed: int = 0


INFER = TrainContext(train=False)


class Layer:
    """Base layer: parameter-free unless params()/grads() are overridden."""

    def params(self) -> list[np.ndarray]:
        return []

    def grads(self) -> list[np.ndarray]:
        return []

    def state_items(self, prefix: str) -> list[tuple[str, np.ndarray]]:
        """All persistent arrays (trainable or not) as (name, array) pairs."""
        return []

    def forward(self, x: np.ndarray, ctx: TrainContext) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ShapeMismatch(message)


class Conv1D(Layer):
    """Same-padded stride-1 cross-correlation along the length axis."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int):
        if kernel % 2 == 0:
            raise ValueError("kernel must be odd for same padding")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.w = np.zeros((kernel, in_channels, out_channels))
        self.b = np.zeros(out_channels)
        self.grad_w = np.zeros_like(self.w)
        self.grad_b = np.zeros_like(self.b)
        self._cols = None
        self._in_shape = None

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.grad_w, self.grad_b]

    def state_items(self, prefix):
        return [(f"{prefix}.W", self.w), (f"{prefix}.b", self.b)]

    def forward(self, x, ctx):
        _require(x.ndim == 3, f"conv1d expects (batch, len, ch), got {x.shape}")
        _require(
            x.shape[2] == self.in_channels,
            f"conv1d expects {self.in_channels} input channels, got {x.shape[2]}",
        )
        batch, length, _ = x.shape
        pad = (self.kernel - 1) // 2
        xp = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
        # (batch, len, in_ch, kernel) -> (batch*len, kernel*in_ch)
        cols = sliding_window_view(xp, self.kernel, axis=1)
        cols = np.ascontiguousarray(np.swapaxes(cols, 2, 3)).reshape(
            batch * length, self.kernel * self.in_channels
        )
        out = cols @ self.w.reshape(-1, self.out_channels) + self.b
        self._cols = cols
        self._in_shape = x.shape
        return out.reshape(batch, length, self.out_channels)

    def backward(self, grad):
        batch, length, _ = self._in_shape
        _require(
            grad.shape == (batch, length, self.out_channels),
            f"conv1d backward got {grad.shape}",
        )
        g2 = grad.reshape(batch * length, self.out_channels)
        self.grad_b[...] = g2.sum(axis=0)
        self.grad_w[...] = (self._cols.T @ g2).reshape(self.w.shape)
        gcols = (g2 @ self.w.reshape(-1, self.out_channels).T).reshape(
            batch, length, self.kernel, self.in_channels
        )
        pad = (self.kernel - 1) // 2
        gxp = np.zeros((batch, length + 2 * pad, self.in_channels))
        for k in range(self.kernel):
            gxp[:, k : k + length, :] += gcols[:, :, k, :]
        return gxp[:, pad : pad + length, :]


class BatchNorm(Layer):
    """Per-channel batch normalization with running statistics.

    Works on (batch, len, channels) and (batch, channels) inputs; statistics
    pool over every non-channel position.
    """

    def __init__(self, channels: int, momentum: float = 0.99, epsilon: float = 1e-3):
        self.channels = channels
        self.momentum = momentum
        self.epsilon = epsilon
        self.gamma = np.ones(channels)
        self.beta = np.zeros(channels)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.grad_gamma = np.zeros_like(self.gamma)
        self.grad_beta = np.zeros_like(self.beta)
        self._cache = None

    def params(self):
        return [self.gamma, self.beta]

    def grads(self):
        return [self.grad_gamma, self.grad_beta]

    def state_items(self, prefix):
        return [
            (f"{prefix}.gamma", self.gamma),
            (f"{prefix}.beta", self.beta),
            (f"{prefix}.running_mean", self.running_mean),
            (f"{prefix}.running_var", self.running_var),
        ]

    def forward(self, x, ctx):
        _require(x.ndim in (2, 3), f"batchnorm expects 2-D or 3-D input, got {x.shape}")
        _require(
            x.shape[-1] == self.channels,
            f"batchnorm expects {self.channels} channels, got {x.shape[-1]}",
        )
        flat = x.reshape(-1, self.channels)
        if ctx.train:
            m = flat.shape[0]
            if m < 2:
                raise DegenerateBatch("batchnorm needs at least 2 values per channel in train mode")
            mean = flat.mean(axis=0)
            var = flat.var(axis=0)
            self.running_mean[...] = self.momentum * self.running_mean + (1 - self.momentum) * mean
            self.running_var[...] = self.momentum * self.running_var + (1 - self.momentum) * var
        else:
            mean = self.running_mean
            var = self.running_var
        ivar = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (flat - mean) * ivar
        self._cache = (xhat, ivar, x.shape, ctx.train)
        return (self.gamma * xhat + self.beta).reshape(x.shape)

    def backward(self, grad):
        xhat, ivar, shape, trained = self._cache
        _require(grad.shape == shape, f"batchnorm backward got {grad.shape}")
        g = grad.reshape(-1, self.channels)
        self.grad_gamma[...] = (g * xhat).sum(axis=0)
        self.grad_beta[...] = g.sum(axis=0)
        dxhat = g * self.gamma
        if trained:
            m = g.shape[0]
            dx = (ivar / m) * (
                m * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
            )
        else:
            dx = dxhat * ivar
        return dx.reshape(shape)


class MaxPool1D(Layer):
    """Same-style max pooling: windows padded with -inf, out_len = ceil(len/stride)."""

    def __init__(self, pool: int = 5, stride: int = 2):
        self.pool = pool
        self.stride = stride
        self._cache = None

    @staticmethod
    def output_length(length: int, stride: int = 2) -> int:
        return -(-length // stride)

    def forward(self, x, ctx):
        _require(x.ndim == 3, f"maxpool expects (batch, len, ch), got {x.shape}")
        batch, length, channels = x.shape
        out_len = self.output_length(length, self.stride)
        pad_total = max((out_len - 1) * self.stride + self.pool - length, 0)
        pad_left = pad_total // 2
        xp = np.pad(
            x, ((0, 0), (pad_left, pad_total - pad_left), (0, 0)), constant_values=-np.inf
        )
        windows = sliding_window_view(xp, self.pool, axis=1)[:, :: self.stride]
        windows = windows[:, :out_len]  # (batch, out_len, ch, pool)
        arg = windows.argmax(axis=3)
        out = np.take_along_axis(windows, arg[..., None], axis=3)[..., 0]
        starts = np.arange(out_len) * self.stride - pad_left
        src = starts[None, :, None] + arg  # original index of each max
        self._cache = (src, x.shape)
        return out

    def backward(self, grad):
        src, shape = self._cache
        batch, length, channels = shape
        _require(grad.shape == src.shape, f"maxpool backward got {grad.shape}")
        b_idx = np.arange(batch)[:, None, None]
        c_idx = np.arange(channels)[None, None, :]
        lin = ((b_idx * length + src) * channels + c_idx).ravel()
        flat = np.bincount(lin, weights=grad.ravel(), minlength=batch * length * channels)
        return flat.reshape(shape)


class ReLU(Layer):
    def __init__(self):
        self._mask = None

    def forward(self, x, ctx):
        self._mask = x > 0
        # maximum (not where) so non-finite inputs propagate instead of
        # being silently zeroed
        return np.maximum(x, 0.0)

    def backward(self, grad):
        return grad * self._mask


class Dropout(Layer):
    """Inverted dropout with a replayable keyed mask; identity at inference."""

    def __init__(self, rate: float, layer_id: int):
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate
        self.layer_id = layer_id
        self._mask = None

    def _stream(self, ctx: TrainContext) -> int:
        return (0x44 << 56) ^ (self.layer_id << 44) ^ (ctx.epoch << 22) ^ ctx.batch

    def forward(self, x, ctx):
        if not ctx.train or self.rate == 0.0:
            self._mask = None
            return x
        rng = SplitMix64(ctx.seed, stream=self._stream(ctx))
        keep = rng.uniforms(x.size).reshape(x.shape) >= self.rate
        self._mask = keep / (1.0 - self.rate)
        return x * self._mask

    def backward(self, grad):
        if self._mask is None:
            return grad
        return grad * self._mask


class Flatten(Layer):
    def __init__(self):
        self._shape = None

    def forward(self, x, ctx):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int):
        self.in_features = in_features
        self.out_features = out_features
        self.w = np.zeros((in_features, out_features))
        self.b = np.zeros(out_features)
        self.grad_w = np.zeros_like(self.w)
        self.grad_b = np.zeros_like(self.b)
        self._x = None

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.grad_w, self.grad_b]

    def state_items(self, prefix):
        return [(f"{prefix}.W", self.w), (f"{prefix}.b", self.b)]

    def forward(self, x, ctx):
        _require(x.ndim == 2, f"dense expects (batch, features), got {x.shape}")
        _require(
            x.shape[1] == self.in_features,
            f"dense expects {self.in_features} features, got {x.shape[1]}",
        )
        self._x = x
        return x @ self.w + self.b

    def backward(self, grad):
        _require(
            grad.shape == (self._x.shape[0], self.out_features),
            f"dense backward got {grad.shape}",
        )
        self.grad_w[...] = self._x.T @ grad
        self.grad_b[...] = grad.sum(axis=0)
        return grad @ self.w.T


class Softmax(Layer):
    def __init__(self):
        self._p = None

    def forward(self, x, ctx):
        _require(x.ndim == 2, f"softmax expects (batch, classes), got {x.shape}")
        shifted = x - x.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        self._p = e / e.sum(axis=1, keepdims=True)
        return self._p

    def backward(self, grad):
        p = self._p
        return p * (grad - (grad * p).sum(axis=1, keepdims=True))
