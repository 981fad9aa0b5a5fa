"""Mini-batch training and evaluation loops."""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np

from warm_freeze.config.models import TrainingConfig
from warm_freeze.exceptions import ModelError
from warm_freeze.nn.layers import Mode
from warm_freeze.nn.loss import class_probabilities, cross_entropy
from warm_freeze.nn.network import NetworkModel
from warm_freeze.nn.optim import CosineSchedule, TrainState, adamw_step
from warm_freeze.simulation.rng import substream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ArraySplit:
    """Inputs (n, 1, L) and integer labels (n,) of one split."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise ModelError(f"x has {len(self.x)} rows but y has {len(self.y)}")

    def __len__(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class EpochRecord:
    """Per-epoch training summary; ``epoch`` counts from 1 within the phase."""

    phase: str
    epoch: int
    train_loss: float
    val_accuracy: float

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_accuracy": self.val_accuracy,
        }


def batch_indices(
    n: int, batch_size: int, rng: Optional[np.random.Generator]
) -> Iterator[np.ndarray]:
    """Index batches over n rows, shuffled when an rng is given."""
    order = rng.permutation(n) if rng is not None else np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def predict_proba(model: NetworkModel, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Eval-mode class probabilities, (n, classes)."""
    if len(x) == 0:
        raise ModelError("Cannot predict on an empty input")
    chunks = [
        class_probabilities(model.forward(x[idx], Mode.EVAL))
        for idx in batch_indices(len(x), batch_size, None)
    ]
    return np.concatenate(chunks)


def evaluate_accuracy(model: NetworkModel, data: ArraySplit, batch_size: int = 256) -> float:
    """Fraction of argmax-correct predictions, ties toward class 0."""
    probs = predict_proba(model, data.x, batch_size)
    return float(np.mean(np.argmax(probs, axis=1) == data.y))


def train_epoch(  # pylint: disable=too-many-arguments
    model: NetworkModel,
    data: ArraySplit,
    state: TrainState,
    schedule: CosineSchedule,
    config: TrainingConfig,
    rng: np.random.Generator,
) -> float:
    """One shuffled pass over ``data``; returns the mean batch loss."""
    if len(data) == 0:
        raise ModelError("Cannot train on an empty split")
    trainable = model.trainable_parameters()
    losses: List[float] = []
    for idx in batch_indices(len(data), config.batch_size, rng):
        model.zero_grad()
        logits = model.forward(data.x[idx], Mode.TRAIN)
        loss, d_logits = cross_entropy(logits, data.y[idx])
        model.backward(d_logits)
        adamw_step(state, trainable, schedule.lr_at(state.schedule_step), config.weight_decay)
        state.schedule_step += 1
        losses.append(loss)
    model.zero_grad()
    return float(np.mean(losses))


def fit(  # pylint: disable=too-many-arguments
    model: NetworkModel,
    train: ArraySplit,
    val: ArraySplit,
    epochs: int,
    state: TrainState,
    schedule: CosineSchedule,
    config: TrainingConfig,
    seed: int,
    phase: str,
    first_epoch: int = 0,
) -> List[EpochRecord]:
    """Train for ``epochs`` epochs, recording validation accuracy after each.

    Shuffles come from the substream keyed by the global epoch index
    (``first_epoch`` + local epoch), so a phase split across calls sees the
    same batches as one uninterrupted run.
    """
    if epochs < 1:
        raise ModelError(f"epochs must be >= 1, got {epochs}")
    if len(val) == 0:
        raise ModelError("Validation split is empty")
    history: List[EpochRecord] = []
    for local in range(epochs):
        rng = substream(seed, first_epoch + local, "shuffle")
        loss = train_epoch(model, train, state, schedule, config, rng)
        accuracy = evaluate_accuracy(model, val)
        history.append(EpochRecord(phase, local + 1, loss, accuracy))
        logger.info(
            "[%s] epoch %d/%d: loss=%.4f val_acc=%.4f", phase, local + 1, epochs, loss, accuracy
        )
    return history


def steps_per_epoch(n: int, batch_size: int) -> int:
    return -(-n // batch_size)
