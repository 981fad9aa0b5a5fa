"""Cross-entropy loss over logits."""

from typing import Tuple

import numpy as np
from scipy.special import log_softmax, softmax

from warm_freeze.exceptions import ShapeMismatchError


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean negative log-softmax of the true class and its gradient.

    Args:
        logits: (n, classes)
        labels: (n,) integer class indices

    Returns:
        (loss, dloss/dlogits) where the gradient is (softmax - onehot) / n

    Raises:
        ShapeMismatchError: If shapes disagree or a label is out of range
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],) or logits.shape[0] == 0:
        raise ShapeMismatchError(
            f"cross_entropy expects (n, c) logits and (n,) labels, got {logits.shape} "
            f"and {labels.shape}"
        )
    if np.any(labels < 0) or np.any(labels >= logits.shape[1]):
        raise ShapeMismatchError(f"Labels must lie in [0, {logits.shape[1]})")
    n = logits.shape[0]
    rows = np.arange(n)
    log_probs = log_softmax(logits, axis=1)
    loss = float(-np.mean(log_probs[rows, labels]))
    grad = softmax(logits, axis=1)
    grad[rows, labels] -= 1.0
    return loss, grad / n


def class_probabilities(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax."""
    return softmax(np.asarray(logits, dtype=np.float64), axis=1)
