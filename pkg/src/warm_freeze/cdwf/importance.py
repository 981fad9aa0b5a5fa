"""Per-block importance from validation gradient norms."""

import logging
import math

import numpy as np

from warm_freeze.cdwf.models import ImportanceProfile
from warm_freeze.exceptions import ImportanceError
from warm_freeze.nn.layers import Mode
from warm_freeze.nn.loss import cross_entropy
from warm_freeze.nn.network import NetworkModel
from warm_freeze.nn.training import ArraySplit, batch_indices

logger = logging.getLogger(__name__)


def block_gradient_norms(model: NetworkModel) -> np.ndarray:
    """L2 norm of the accumulated gradient over each block's base parameters."""
    norms = np.zeros(model.n_blocks)
    for index in range(model.n_blocks):
        squares = [
            float(np.sum(p.grad * p.grad))
            for _, p in model.group_parameters(index)
            if p.grad is not None
        ]
        norms[index] = math.sqrt(math.fsum(squares))
    return norms


def compute_importance(
    model: NetworkModel, val: ArraySplit, n_batches: int, batch_size: int = 64
) -> ImportanceProfile:
    """Average block gradient norms over the first ``n_batches`` validation batches.

    Batches are taken in order, without shuffling, and batch-norm runs on its
    running statistics, so neither parameters nor buffers change. Gradients
    are cleared before returning.

    Raises:
        ImportanceError: If a block is frozen, the split is empty, or every norm is zero
    """
    if n_batches < 1:
        raise ImportanceError(f"n_batches must be >= 1, got {n_batches}")
    if len(val) == 0:
        raise ImportanceError("Validation split is empty")
    frozen = [i for i in range(model.n_blocks) if not model.group_trainable(i)]
    if frozen:
        raise ImportanceError(f"Importance needs every block trainable; frozen: {frozen}")

    batches = list(batch_indices(len(val), batch_size, None))[:n_batches]
    totals = np.zeros(model.n_blocks)
    for idx in batches:
        model.zero_grad()
        logits = model.forward(val.x[idx], Mode.EVAL)
        _, d_logits = cross_entropy(logits, val.y[idx])
        model.backward(d_logits)
        totals += block_gradient_norms(model)
    model.zero_grad()

    profile = ImportanceProfile.from_gradient_norms(
        totals / len(batches), n_batches=len(batches), batch_size=batch_size
    )
    logger.info(
        "Importance over %d batches: %s",
        len(batches),
        np.round(profile.i, 3).tolist(),
    )
    return profile
