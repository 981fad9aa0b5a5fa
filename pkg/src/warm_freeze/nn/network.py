"""1D residual network: stem, BasicBlocks and a linear head.

Blocks are the unit of freeze and adapter decisions. The stem has no block
of its own and travels with block 0, so block groups plus the head cover
every base parameter.
"""

import logging
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from warm_freeze.config.models import ModelConfig
from warm_freeze.exceptions import (
    BackwardWithoutForwardError,
    LoraAttachmentError,
    NonFiniteError,
    ShapeMismatchError,
)
from warm_freeze.nn.accounting import ParameterLayout
from warm_freeze.nn.layers import (
    BatchNorm1d,
    Conv1d,
    GlobalAvgPool1d,
    Layer,
    Linear,
    Mode,
    Parameter,
    ReLU,
)
from warm_freeze.nn.lora import LoraAdapter
from warm_freeze.simulation.rng import substream

logger = logging.getLogger(__name__)

NamedParameters = List[Tuple[str, Parameter]]


class ConvBn(Layer):
    """Convolution followed by batch-norm."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int,
        rng: np.random.Generator,
        eps: float,
        momentum: float,
    ) -> None:
        self.conv = Conv1d(in_channels, out_channels, kernel_size, stride, rng)
        self.bn = BatchNorm1d(out_channels, eps, momentum)

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        return self.bn.forward(self.conv.forward(x, mode), mode)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return self.conv.backward(self.bn.backward(dout))


class Stem(Layer):
    def __init__(self, config: ModelConfig, channels: int, rng: np.random.Generator) -> None:
        self.body = ConvBn(
            1,
            channels,
            config.stem_kernel,
            config.stem_stride,
            rng,
            config.bn_eps,
            config.bn_momentum,
        )
        self.relu = ReLU()

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        return self.relu.forward(self.body.forward(x, mode), mode)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return self.body.backward(self.relu.backward(dout))


class BasicBlock1d(Layer):  # pylint: disable=too-many-instance-attributes
    """conv3-bn-relu-conv3-bn plus identity or 1x1 projection shortcut, then relu."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        stride: int,
        rng: np.random.Generator,
        eps: float = 1e-5,
        momentum: float = 0.1,
    ) -> None:
        self.conv1 = Conv1d(in_channels, out_channels, 3, stride, rng)
        self.bn1 = BatchNorm1d(out_channels, eps, momentum)
        self.relu1 = ReLU()
        self.conv2 = Conv1d(out_channels, out_channels, 3, 1, rng)
        self.bn2 = BatchNorm1d(out_channels, eps, momentum)
        self.downsample: Optional[ConvBn] = None
        if stride != 1 or in_channels != out_channels:
            self.downsample = ConvBn(in_channels, out_channels, 1, stride, rng, eps, momentum)
        self.relu2 = ReLU()

    @property
    def lora(self) -> Optional[LoraAdapter]:
        return self.conv2.lora

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        out = self.relu1.forward(self.bn1.forward(self.conv1.forward(x, mode), mode), mode)
        out = self.bn2.forward(self.conv2.forward(out, mode), mode)
        identity = x if self.downsample is None else self.downsample.forward(x, mode)
        return self.relu2.forward(out + identity, mode)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        d_sum = self.relu2.backward(dout)
        d_main = self.conv2.backward(self.bn2.backward(d_sum))
        d_main = self.conv1.backward(self.bn1.backward(self.relu1.backward(d_main)))
        d_skip = d_sum if self.downsample is None else self.downsample.backward(d_sum)
        return d_main + d_skip


class Head(Layer):
    def __init__(self, channels: int, num_classes: int, rng: np.random.Generator) -> None:
        self.pool = GlobalAvgPool1d()
        self.fc = Linear(channels, num_classes, rng)

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        return self.fc.forward(self.pool.forward(x, mode), mode)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return self.pool.backward(self.fc.backward(dout))


def _is_adapter(name: str) -> bool:
    return ".lora." in name


class NetworkModel(Layer):
    """Stem + residual blocks + head with per-block trainability and adapters."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        self.config = config
        widths = scaled_widths(config)
        stem_channels = scaled_channels(config.stem_channels, config.width_scale)
        self.stem = Stem(config, stem_channels, rng)
        self.blocks: List[BasicBlock1d] = []
        in_channels = stem_channels
        for out_channels in widths:
            stride = 1 if out_channels == in_channels else 2
            self.blocks.append(
                BasicBlock1d(
                    in_channels, out_channels, stride, rng, config.bn_eps, config.bn_momentum
                )
            )
            in_channels = out_channels
        self.head = Head(in_channels, config.num_classes, rng)
        self._forward_cached = False

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def forward(self, x: np.ndarray, mode: Mode = Mode.EVAL) -> np.ndarray:
        """Logits for a (n, 1, input_length) batch.

        Raises:
            ShapeMismatchError: If the batch shape is wrong
            NonFiniteError: If the input or the logits are not finite
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1] != 1 or x.shape[2] != self.config.input_length:
            raise ShapeMismatchError(
                f"Expected batch of shape (n, 1, {self.config.input_length}), got {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise NonFiniteError("Input batch contains NaN or infinity")
        mode = Mode(mode)
        out = self.stem.forward(x, mode)
        for block in self.blocks:
            out = block.forward(out, mode)
        logits = self.head.forward(out, mode)
        if not np.all(np.isfinite(logits)):
            raise NonFiniteError("Forward pass produced non-finite logits")
        self._forward_cached = True
        return logits

    def backward(self, d_logits: np.ndarray) -> np.ndarray:
        """Accumulate gradients of trainable parameters; returns d(input).

        Raises:
            BackwardWithoutForwardError: If no forward pass is cached
            NonFiniteError: If a gradient is not finite
        """
        if not self._forward_cached:
            raise BackwardWithoutForwardError("backward() requires a preceding forward()")
        self._forward_cached = False
        grad = self.head.backward(d_logits)
        for block in reversed(self.blocks):
            grad = block.backward(grad)
        grad = self.stem.backward(grad)
        for name, param in self.named_parameters():
            if param.grad is not None and not np.all(np.isfinite(param.grad)):
                raise NonFiniteError(f"Non-finite gradient in {name}")
        return grad

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def head_parameters(self) -> NamedParameters:
        return list(self.head.named_parameters("head."))

    def group_parameters(self, index: int) -> NamedParameters:
        """Base (non-adapter) parameters of block ``index``; block 0 includes the stem."""
        self._check_index(index)
        named = list(self.blocks[index].named_parameters(f"blocks.{index}."))
        if index == 0:
            named = list(self.stem.named_parameters("stem.")) + named
        return [(n, p) for n, p in named if not _is_adapter(n)]

    def adapter_parameters(self, index: int) -> NamedParameters:
        self._check_index(index)
        lora = self.blocks[index].lora
        if lora is None:
            return []
        return list(lora.named_parameters(f"blocks.{index}.conv2.lora."))

    def base_parameters(self) -> NamedParameters:
        return [(n, p) for n, p in self.named_parameters() if not _is_adapter(n)]

    def trainable_parameters(self) -> NamedParameters:
        return [(n, p) for n, p in self.named_parameters() if p.trainable]

    def _group_norms(self, index: int) -> List[BatchNorm1d]:
        layers: List[Layer] = [self.blocks[index]] + ([self.stem] if index == 0 else [])
        found: List[BatchNorm1d] = []

        def walk(layer: Layer) -> None:
            if isinstance(layer, BatchNorm1d):
                found.append(layer)
            for _, child in layer.children():
                walk(child)

        for layer in layers:
            walk(layer)
        return found

    def set_group_trainable(self, index: int, trainable: bool) -> None:
        """Freeze or unfreeze a block's base parameters and batch-norm statistics."""
        for _, param in self.group_parameters(index):
            param.trainable = trainable
        for norm in self._group_norms(index):
            norm.frozen_stats = not trainable

    def group_trainable(self, index: int) -> bool:
        return all(p.trainable for _, p in self.group_parameters(index))

    def attach_lora(
        self,
        block_indices: Iterable[int],
        rank: int,
        rng: np.random.Generator,
        alpha: Optional[float] = None,
    ) -> "NetworkModel":
        """Add zero-initialised adapters to conv2 of each listed block and freeze its base.

        Raises:
            LoraAttachmentError: On a bad rank or index, or if a block already has an adapter
        """
        indices = sorted(set(int(i) for i in block_indices))
        if rank < 1:
            raise LoraAttachmentError(f"LoRA rank must be >= 1, got {rank}")
        for index in indices:
            if not 0 <= index < self.n_blocks:
                raise LoraAttachmentError(f"Block index {index} outside 0..{self.n_blocks - 1}")
            if self.blocks[index].lora is not None:
                raise LoraAttachmentError(f"Block {index} already has a LoRA adapter")
        alpha = alpha if alpha is not None else self.config.lora_alpha
        for index in indices:
            conv = self.blocks[index].conv2
            conv.lora = LoraAdapter(conv.weight.shape, rank, rng, alpha)
            self.set_group_trainable(index, False)
        logger.debug("Attached rank-%d adapters to blocks %s", rank, indices)
        return self

    def lora_ranks(self) -> Dict[int, int]:
        return {i: b.lora.rank for i, b in enumerate(self.blocks) if b.lora is not None}

    def layout(self) -> ParameterLayout:
        """Parameter counts per group for configuration accounting."""
        return ParameterLayout(
            head=sum(p.size for _, p in self.head_parameters()),
            blocks=tuple(
                sum(p.size for _, p in self.group_parameters(i)) for i in range(self.n_blocks)
            ),
            conv2_shapes=tuple(
                (b.conv2.out_channels, b.conv2.in_channels, b.conv2.kernel_size)
                for b in self.blocks
            ),
        )

    def state_arrays(self) -> List[Tuple[str, np.ndarray]]:
        """Every parameter then every buffer, by name, in a fixed order."""
        return [(n, p.data) for n, p in self.named_parameters()] + list(self.named_buffers())

    def _check_index(self, index: int) -> None:
        if not 0 <= index < self.n_blocks:
            raise IndexError(f"Block index {index} outside 0..{self.n_blocks - 1}")


def scaled_channels(channels: int, width_scale: float) -> int:
    return max(1, int(round(channels * width_scale)))


def scaled_widths(config: ModelConfig) -> List[int]:
    return [scaled_channels(c, config.width_scale) for c in config.block_channels]


def build_network(config: ModelConfig, seed: int) -> NetworkModel:
    """Construct a freshly initialised network from the ``init`` substream of ``seed``."""
    model = NetworkModel(config, substream(seed, 0, "init"))
    layout = model.layout()
    logger.debug(
        "Built %d-block network: %d parameters (head %d)",
        model.n_blocks,
        layout.total,
        layout.head,
    )
    return model
