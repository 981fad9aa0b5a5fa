"""Low-rank adapters for convolution weights.

The conv weight (c_out, c_in, k) is viewed as a (c_out, c_in * k) matrix and
adapted as W + scaling * (b @ a). ``b`` starts at zero, so attaching an
adapter leaves the layer's output unchanged.
"""

from typing import Optional, Tuple

import numpy as np

from warm_freeze.exceptions import LoraAttachmentError
from warm_freeze.nn.layers import Layer, Parameter


def adapter_param_count(c_out: int, c_in: int, kernel_size: int, rank: int) -> int:
    """r * (c_out + c_in * k)."""
    return rank * (c_out + c_in * kernel_size)


class LoraAdapter(Layer):
    """Trainable low-rank delta for one Conv1d weight.

    Attributes:
        a: (rank, c_in * k), drawn from N(0, 1 / (c_in * k))
        b: (c_out, rank), zeros at creation
        rank: Inner dimension r
        alpha: Scale numerator; scaling = alpha / rank
    """

    def __init__(
        self,
        weight_shape: Tuple[int, ...],
        rank: int,
        rng: np.random.Generator,
        alpha: Optional[float] = None,
    ) -> None:
        if rank < 1:
            raise LoraAttachmentError(f"LoRA rank must be >= 1, got {rank}")
        c_out, c_in, kernel_size = weight_shape
        fan_in = c_in * kernel_size
        self.rank = rank
        self.alpha = float(rank if alpha is None else alpha)
        self.scaling = self.alpha / rank
        self.a = Parameter(rng.normal(0.0, np.sqrt(1.0 / fan_in), size=(rank, fan_in)))
        self.b = Parameter(np.zeros((c_out, rank)))

    @property
    def param_count(self) -> int:
        return self.a.size + self.b.size

    def delta(self, weight_shape: Tuple[int, ...]) -> np.ndarray:
        """scaling * reshape(b @ a) in the conv weight's shape."""
        return (self.scaling * (self.b.data @ self.a.data)).reshape(weight_shape)

    def backward(self, d_weight: np.ndarray) -> None:
        """Chain the (c_out, c_in * k) effective-weight gradient into a and b."""
        self.a.accumulate(self.scaling * (self.b.data.T @ d_weight))
        self.b.accumulate(self.scaling * (d_weight @ self.a.data.T))
