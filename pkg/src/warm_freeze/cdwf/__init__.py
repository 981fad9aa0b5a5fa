"""Budget-constrained warm-freeze configuration search."""

from .importance import block_gradient_norms, compute_importance
from .models import SENTINEL_RANK, CalibrationRecord, CandidateConfig, CdwfPlan, ImportanceProfile
from .pipeline import (
    CdwfOutcome,
    CdwfSweep,
    PhaseOutcome,
    apply_config,
    build_uniform_lora,
    finetune,
    run_cdwf,
    train_full,
    train_uniform_lora,
    warm_start,
    warn_if_k_decreases,
)
from .predictor import eta, importance_coverage, predict_accuracy
from .search import enumerate_candidates, score_candidates, select, trainable_fraction

__all__ = [
    "SENTINEL_RANK",
    "CalibrationRecord",
    "CandidateConfig",
    "CdwfOutcome",
    "CdwfPlan",
    "CdwfSweep",
    "ImportanceProfile",
    "PhaseOutcome",
    "apply_config",
    "block_gradient_norms",
    "build_uniform_lora",
    "compute_importance",
    "enumerate_candidates",
    "eta",
    "finetune",
    "importance_coverage",
    "predict_accuracy",
    "run_cdwf",
    "score_candidates",
    "select",
    "train_full",
    "train_uniform_lora",
    "trainable_fraction",
    "warm_start",
    "warn_if_k_decreases",
]
