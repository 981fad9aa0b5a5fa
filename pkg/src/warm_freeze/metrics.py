"""Evaluation metrics: accuracy, ROC-AUC, retention and parameter reduction."""

import logging
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
from scipy.stats import rankdata

from warm_freeze.exceptions import MetricError

logger = logging.getLogger(__name__)

SCORE_DEFINITION = "softmax probability of class 1"


@dataclass(frozen=True)
class EvalResult:
    """Test-split metrics of one model."""

    accuracy: float
    auc: float
    n_examples: int
    score_definition: str = SCORE_DEFINITION

    def __post_init__(self) -> None:
        for name, value in (("accuracy", self.accuracy), ("auc", self.auc)):
            if not 0.0 <= value <= 1.0:
                raise MetricError(f"{name} must lie in [0, 1], got {value}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "auc": self.auc,
            "n_examples": self.n_examples,
            "score_definition": self.score_definition,
        }


def _labels(labels: Any, n: int) -> np.ndarray:
    y = np.asarray(labels).astype(np.int64).ravel()
    if len(y) != n:
        raise MetricError(f"Got {n} predictions but {len(y)} labels")
    return y


def accuracy(predictions: Any, labels: Any) -> float:
    """Fraction of correct predictions.

    Args:
        predictions: Class probabilities or logits of shape (n, classes), or
            predicted class indices of shape (n,)
        labels: True class indices

    Raises:
        MetricError: If the input is empty or the lengths differ
    """
    pred = np.asarray(predictions)
    if pred.size == 0:
        raise MetricError("accuracy of an empty set is undefined")
    # argmax returns the first maximum, so ties go to class 0
    classes = np.argmax(pred, axis=1) if pred.ndim == 2 else pred.astype(np.int64)
    y = _labels(labels, len(classes))
    return float(np.count_nonzero(classes == y) / len(y))


def roc_auc(scores: Any, labels: Any) -> float:
    """Area under the ROC curve via the rank-sum (Mann-Whitney) statistic.

    Tied scores get their average rank, which counts each tied
    positive/negative pair as one half.

    Raises:
        MetricError: If the input is empty or holds only one class
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0:
        raise MetricError("AUC of an empty set is undefined")
    y = _labels(labels, len(s))
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both classes present")
    ranks = rankdata(s)
    rank_sum = float(np.sum(ranks[y == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def retention(method_metric: float, reference_metric: float) -> float:
    """Method metric as a percentage of the reference metric.

    Raises:
        MetricError: If the reference is not positive
    """
    if reference_metric <= 0:
        raise MetricError(f"Retention needs a positive reference, got {reference_metric}")
    return 100.0 * method_metric / reference_metric


def param_reduction(p_train_full: int, p_train_method: int) -> float:
    """How many times fewer parameters the method trains than full fine-tuning.

    Raises:
        MetricError: If the method trains no parameters
    """
    if p_train_method <= 0:
        raise MetricError(f"Parameter reduction needs a positive count, got {p_train_method}")
    return p_train_full / p_train_method


def evaluate_scores(probabilities: np.ndarray, labels: np.ndarray) -> EvalResult:
    """Accuracy and AUC from (n, 2) class probabilities."""
    probs = np.asarray(probabilities, dtype=np.float64)
    result = EvalResult(
        accuracy=accuracy(probs, labels),
        auc=roc_auc(probs[:, 1], labels),
        n_examples=len(probs),
    )
    logger.debug(
        "Evaluated %d examples: acc=%.4f auc=%.4f", len(probs), result.accuracy, result.auc
    )
    return result
