"""Closed-form accuracy predictor for a candidate configuration."""

import math
from typing import Callable

from warm_freeze.cdwf.models import CalibrationRecord, CandidateConfig, ImportanceProfile
from warm_freeze.exceptions import CdwfError

RANK_SATURATION = 8.0
ETA_CAP = 0.5


def eta(rank: int) -> float:
    """Adapter efficiency min(0.5, r / 8).

    Raises:
        CdwfError: If rank < 1
    """
    if rank < 1:
        raise CdwfError(f"eta is defined for rank >= 1, got {rank}")
    return min(ETA_CAP, rank / RANK_SATURATION)


def importance_coverage(
    cand: CandidateConfig, importance: ImportanceProfile, eta_fn: Callable[[int], float] = eta
) -> float:
    """Kept importance plus eta-weighted frozen importance, at most 1.

    Exactly rounded sums keep the value non-decreasing as blocks move from F
    to K; the cap absorbs the last-ulp excess of importances summing to one.
    """
    kept = [importance.i[b] for b in cand.kept]
    adapted = [eta_fn(cand.rank) * importance.i[b] for b in cand.frozen] if cand.frozen else []
    return min(1.0, math.fsum(kept + adapted))


def predict_accuracy(
    cand: CandidateConfig,
    importance: ImportanceProfile,
    calibration: CalibrationRecord,
    eta_fn: Callable[[int], float] = eta,
) -> float:
    """a_warm + max(g_max, 0) * coverage(cand)."""
    return calibration.a_warm + calibration.effective_g_max * importance_coverage(
        cand, importance, eta_fn
    )
