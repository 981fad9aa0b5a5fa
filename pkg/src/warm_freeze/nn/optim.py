"""AdamW with decoupled weight decay and a cosine learning-rate schedule."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

from warm_freeze.config.models import TrainingConfig
from warm_freeze.nn.layers import Parameter

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CosineSchedule:
    """Cosine decay from ``peak_lr`` at step 0 to 0 at ``total_steps``, no warmup."""

    peak_lr: float
    total_steps: int

    def lr_at(self, step: int) -> float:
        if self.total_steps <= 0:
            return self.peak_lr
        progress = min(step, self.total_steps) / self.total_steps
        return 0.5 * self.peak_lr * (1.0 + math.cos(math.pi * progress))


@dataclass
class TrainState:
    """Optimizer moments for the trainable set plus step counters.

    ``step`` drives bias correction and restarts with the moments;
    ``schedule_step`` keeps counting across phases so one cosine curve can
    span warm-start and fine-tuning.
    """

    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    schedule_step: int = 0
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    @classmethod
    def for_parameters(
        cls,
        named_parameters: Sequence[Tuple[str, Parameter]],
        config: TrainingConfig,
        schedule_step: int = 0,
    ) -> "TrainState":
        """Fresh zero moments for exactly the trainable parameters."""
        state = cls(
            schedule_step=schedule_step,
            betas=(float(config.betas[0]), float(config.betas[1])),
            eps=config.eps,
        )
        for name, param in named_parameters:
            if param.trainable:
                state.first_moment[name] = np.zeros_like(param.data)
                state.second_moment[name] = np.zeros_like(param.data)
        return state


def adamw_step(
    state: TrainState,
    named_parameters: Sequence[Tuple[str, Parameter]],
    lr: float,
    weight_decay: float,
) -> None:
    """One decoupled AdamW update of every trainable parameter, in place.

    Frozen parameters, and parameters without moments, are left bit-unchanged.
    A trainable parameter with no gradient is updated as if its gradient were
    zero.
    """
    state.step += 1
    beta1, beta2 = state.betas
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for name, param in named_parameters:
        if not param.trainable or name not in state.first_moment:
            continue
        grad = param.grad if param.grad is not None else np.zeros_like(param.data)
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        param.data *= 1.0 - lr * weight_decay
        param.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
