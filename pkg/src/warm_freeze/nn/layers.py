"""Layers of the 1D residual network with hand-written backward passes.

Every layer caches what its backward pass needs during ``forward`` and
consumes the cache in ``backward``. Gradients are accumulated only into
parameters flagged trainable; the input gradient is always returned so
upstream layers keep receiving signal through frozen ones.
"""

from __future__ import annotations

from enum import Enum
from typing import TYPE_CHECKING, Any, Iterator, List, Optional, Tuple

import numpy as np

from warm_freeze.exceptions import BackwardWithoutForwardError, ShapeMismatchError

if TYPE_CHECKING:
    from warm_freeze.nn.lora import LoraAdapter


class Mode(str, Enum):
    """Forward mode; batch-norm uses batch statistics only in TRAIN."""

    TRAIN = "train"
    EVAL = "eval"


class Parameter:
    """A float64 tensor with its gradient and trainability flag."""

    __slots__ = ("data", "grad", "trainable")

    def __init__(self, data: np.ndarray, trainable: bool = True) -> None:
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.trainable = trainable

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    def accumulate(self, grad: np.ndarray) -> None:
        """Add to the gradient if trainable; frozen parameters keep no gradient."""
        if not self.trainable:
            return
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad += grad

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Parameter(shape={self.shape}, trainable={self.trainable})"


class Layer:
    """Base class: named parameters and buffers plus forward/backward."""

    def children(self) -> Iterator[Tuple[str, "Layer"]]:
        for name, value in vars(self).items():
            if isinstance(value, Layer):
                yield name, value
            elif isinstance(value, list):
                for index, item in enumerate(value):
                    if isinstance(item, Layer):
                        yield f"{name}.{index}", item

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        """Parameters in attribute order, e.g. ``blocks.3.conv2.weight``."""
        for name, value in vars(self).items():
            if isinstance(value, Parameter):
                yield prefix + name, value
        for name, child in self.children():
            yield from child.named_parameters(f"{prefix}{name}.")

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name, child in self.children():
            yield from child.named_buffers(f"{prefix}{name}.")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def set_trainable(self, trainable: bool) -> None:
        for p in self.parameters():
            p.trainable = trainable


def _require(cache: Optional[Any], layer: str) -> Any:
    if cache is None:
        raise BackwardWithoutForwardError(f"{layer}.backward() called without a cached forward")
    return cache


def im2col_1d(x: np.ndarray, kernel_size: int, stride: int, padding: int) -> np.ndarray:
    """Unfold (n, c, L) into columns of shape (n, c * k, out_len)."""
    n, c, length = x.shape
    out_len = (length + 2 * padding - kernel_size) // stride + 1
    padded = np.pad(x, ((0, 0), (0, 0), (padding, padding))) if padding else x
    cols = np.empty((n, c, kernel_size, out_len), dtype=np.float64)
    for j in range(kernel_size):
        cols[:, :, j, :] = padded[:, :, j : j + stride * out_len : stride]
    return cols.reshape(n, c * kernel_size, out_len)


def col2im_1d(
    cols: np.ndarray, x_shape: Tuple[int, int, int], kernel_size: int, stride: int, padding: int
) -> np.ndarray:
    """Adjoint of :func:`im2col_1d`: fold column gradients back onto the input."""
    n, c, length = x_shape
    out_len = cols.shape[-1]
    cols = cols.reshape(n, c, kernel_size, out_len)
    padded = np.zeros((n, c, length + 2 * padding), dtype=np.float64)
    for j in range(kernel_size):
        padded[:, :, j : j + stride * out_len : stride] += cols[:, :, j, :]
    return padded[:, :, padding : padding + length]


class Conv1d(Layer):
    """1D convolution with same padding (k // 2) and no bias.

    A LoRA adapter, when attached, adds ``scaling * reshape(b @ a)`` to the
    weight at every forward pass.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int,
        rng: np.random.Generator,
    ) -> None:
        if kernel_size % 2 == 0:
            raise ShapeMismatchError(f"Conv1d kernel size must be odd, got {kernel_size}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = kernel_size // 2
        fan_in = in_channels * kernel_size
        self.weight = Parameter(
            rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(out_channels, in_channels, kernel_size))
        )
        self.lora: Optional["LoraAdapter"] = None
        self._cache: Optional[Tuple[np.ndarray, Tuple[int, int, int]]] = None

    def effective_weight(self) -> np.ndarray:
        """Base weight plus the adapter delta, if any."""
        if self.lora is None:
            return self.weight.data
        return self.weight.data + self.lora.delta(self.weight.shape)

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        del mode
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeMismatchError(
                f"Conv1d expects (n, {self.in_channels}, L) input, got {x.shape}"
            )
        cols = im2col_1d(x, self.kernel_size, self.stride, self.padding)
        w = self.effective_weight().reshape(self.out_channels, -1)
        self._cache = (cols, x.shape)
        return np.matmul(w, cols)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        cols, x_shape = _require(self._cache, "Conv1d")
        self._cache = None
        w = self.effective_weight().reshape(self.out_channels, -1)
        d_weight = np.matmul(dout, cols.transpose(0, 2, 1)).sum(axis=0)
        self.weight.accumulate(d_weight.reshape(self.weight.shape))
        if self.lora is not None:
            self.lora.backward(d_weight)
        d_cols = np.matmul(w.T, dout)
        return col2im_1d(d_cols, x_shape, self.kernel_size, self.stride, self.padding)


class BatchNorm1d(Layer):
    """Per-channel batch normalization over (batch, length).

    With ``frozen_stats`` set the layer always normalizes with its running
    statistics and never updates them, whatever the mode.
    """

    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.1) -> None:
        self.channels = channels
        self.eps = eps
        self.momentum = momentum
        self.gamma = Parameter(np.ones(channels))
        self.beta = Parameter(np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.frozen_stats = False
        self._cache: Optional[Tuple[np.ndarray, np.ndarray, bool]] = None

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        yield prefix + "running_mean", self.running_mean
        yield prefix + "running_var", self.running_var

    def uses_batch_stats(self, mode: Mode) -> bool:
        return mode == Mode.TRAIN and not self.frozen_stats

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.channels:
            raise ShapeMismatchError(f"BatchNorm1d expects (n, {self.channels}, L), got {x.shape}")
        batch_stats = self.uses_batch_stats(mode)
        if batch_stats:
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            count = x.shape[0] * x.shape[2]
            unbiased = var * count / (count - 1) if count > 1 else var
            self.running_mean[:] = (1 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var[:] = (1 - self.momentum) * self.running_var + self.momentum * unbiased
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = (x - mean[None, :, None]) * inv_std[None, :, None]
        self._cache = (x_hat, inv_std, batch_stats)
        return self.gamma.data[None, :, None] * x_hat + self.beta.data[None, :, None]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x_hat, inv_std, batch_stats = _require(self._cache, "BatchNorm1d")
        self._cache = None
        self.gamma.accumulate((dout * x_hat).sum(axis=(0, 2)))
        self.beta.accumulate(dout.sum(axis=(0, 2)))
        d_hat = dout * self.gamma.data[None, :, None]
        if not batch_stats:
            return d_hat * inv_std[None, :, None]
        count = dout.shape[0] * dout.shape[2]
        sum_d = d_hat.sum(axis=(0, 2), keepdims=True)
        sum_dx = (d_hat * x_hat).sum(axis=(0, 2), keepdims=True)
        return inv_std[None, :, None] / count * (count * d_hat - sum_d - x_hat * sum_dx)


class Linear(Layer):
    """Fully connected layer y = x W^T + b."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator) -> None:
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(
            rng.normal(0.0, np.sqrt(1.0 / in_features), size=(out_features, in_features))
        )
        self.bias = Parameter(np.zeros(out_features))
        self._cache: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        del mode
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeMismatchError(f"Linear expects (n, {self.in_features}), got {x.shape}")
        self._cache = x
        return x @ self.weight.data.T + self.bias.data

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = _require(self._cache, "Linear")
        self._cache = None
        self.weight.accumulate(dout.T @ x)
        self.bias.accumulate(dout.sum(axis=0))
        return dout @ self.weight.data


class ReLU(Layer):
    def __init__(self) -> None:
        self._mask: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        del mode
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        mask = _require(self._mask, "ReLU")
        self._mask = None
        return np.where(mask, dout, 0.0)


class GlobalAvgPool1d(Layer):
    def __init__(self) -> None:
        self._shape: Optional[Tuple[int, int, int]] = None

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        del mode
        self._shape = x.shape
        return x.mean(axis=2)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        n, c, length = _require(self._shape, "GlobalAvgPool1d")
        self._shape = None
        return np.broadcast_to(dout[:, :, None] / length, (n, c, length)).copy()

