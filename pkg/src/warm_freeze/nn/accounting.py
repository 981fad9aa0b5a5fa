"""Exact trainable-parameter accounting per block configuration."""

from dataclasses import dataclass
from typing import AbstractSet, Protocol, Tuple

from warm_freeze.exceptions import ConfigurationConflictError
from warm_freeze.nn.lora import adapter_param_count


class BlockConfiguration(Protocol):
    """Anything naming kept blocks, frozen-with-adapter blocks and a rank."""

    @property
    def kept(self) -> AbstractSet[int]: ...

    @property
    def frozen(self) -> AbstractSet[int]: ...

    @property
    def rank(self) -> int: ...


@dataclass(frozen=True)
class ParameterLayout:
    """Parameter counts of a network, grouped the way configurations address them.

    Attributes:
        head: Classification head parameters (always trainable)
        blocks: Base parameters per block; the stem is counted in block 0
        conv2_shapes: (c_out, c_in, k) of each block's adapted convolution
    """

    head: int
    blocks: Tuple[int, ...]
    conv2_shapes: Tuple[Tuple[int, int, int], ...]

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def total(self) -> int:
        """All base parameters; adapters are excluded."""
        return self.head + sum(self.blocks)

    def adapter_params(self, block: int, rank: int) -> int:
        c_out, c_in, kernel_size = self.conv2_shapes[block]
        return adapter_param_count(c_out, c_in, kernel_size, rank)

    def count(
        self, kept: AbstractSet[int], frozen: AbstractSet[int], rank: int
    ) -> Tuple[int, int]:
        """(p_train, p_total) for a configuration.

        p_train = head + every base parameter of kept blocks + the adapters of
        frozen blocks at ``rank``.

        Raises:
            ConfigurationConflictError: If kept and frozen overlap, an index is
                out of range, or frozen blocks are given without a positive rank
        """
        overlap = set(kept) & set(frozen)
        if overlap:
            raise ConfigurationConflictError(f"Blocks {sorted(overlap)} are both kept and frozen")
        for index in set(kept) | set(frozen):
            if not 0 <= index < self.n_blocks:
                raise ConfigurationConflictError(
                    f"Block index {index} outside 0..{self.n_blocks - 1}"
                )
        if frozen and rank < 1:
            raise ConfigurationConflictError(f"Frozen blocks need a rank >= 1, got {rank}")
        p_train = self.head
        p_train += sum(self.blocks[i] for i in kept)
        p_train += sum(self.adapter_params(j, rank) for j in frozen)
        return p_train, self.total

    def fraction(self, kept: AbstractSet[int], frozen: AbstractSet[int], rank: int) -> float:
        """p_train / p_total in 64-bit."""
        p_train, p_total = self.count(kept, frozen, rank)
        return p_train / p_total


def count_params(layout: ParameterLayout, config: BlockConfiguration) -> Tuple[int, int]:
    """(p_train, p_total) of ``config`` on a network with ``layout``."""
    return layout.count(config.kept, config.frozen, config.rank)
