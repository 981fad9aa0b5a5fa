"""Candidate enumeration and budget-constrained selection."""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Union

from warm_freeze.cdwf.models import (
    SENTINEL_RANK,
    CalibrationRecord,
    CandidateConfig,
    CdwfPlan,
    ImportanceProfile,
)
from warm_freeze.cdwf.predictor import predict_accuracy
from warm_freeze.exceptions import CdwfError, InfeasibleBudgetError
from warm_freeze.nn.accounting import ParameterLayout
from warm_freeze.nn.network import NetworkModel

logger = logging.getLogger(__name__)

LayoutSource = Union[ParameterLayout, NetworkModel]


def _layout(source: LayoutSource) -> ParameterLayout:
    return source.layout() if isinstance(source, NetworkModel) else source


def enumerate_candidates(
    importance: ImportanceProfile, rank_set: Iterable[int], b: int
) -> List[CandidateConfig]:
    """Top-k nested candidates for k = 0..b.

    For k < b there is one candidate per rank (ascending); k = b yields a
    single all-kept candidate with the sentinel rank.

    Raises:
        CdwfError: If the importance profile does not have b entries or a rank is < 1
    """
    if importance.n_blocks != b:
        raise CdwfError(f"Importance has {importance.n_blocks} blocks, expected {b}")
    ranks = sorted(set(int(r) for r in rank_set))
    if not ranks or ranks[0] < 1:
        raise CdwfError(f"Rank set must contain ranks >= 1, got {ranks}")
    order = importance.ranking()
    candidates: List[CandidateConfig] = []
    for k in range(b + 1):
        kept = frozenset(order[:k])
        frozen = frozenset(order[k:])
        if k < b:
            candidates.extend(CandidateConfig(kept, frozen, r) for r in ranks)
        else:
            candidates.append(CandidateConfig(kept, frozenset(), SENTINEL_RANK))
    return candidates


def trainable_fraction(cand: CandidateConfig, source: LayoutSource) -> float:
    """p_train / p_total of ``cand``."""
    return _layout(source).fraction(cand.kept, cand.frozen, cand.rank)


@dataclass(frozen=True)
class ScoredCandidate:
    """A candidate with its predicted accuracy and exact parameter counts."""

    config: CandidateConfig
    predicted_accuracy: float
    p_train: int
    p_total: int

    @property
    def fraction(self) -> float:
        return self.p_train / self.p_total

    def preference_key(self) -> tuple:
        """Smaller is preferred among near-best candidates."""
        return (self.fraction, self.config.k, self.config.rank)


def score_candidates(
    candidates: Sequence[CandidateConfig],
    source: LayoutSource,
    importance: ImportanceProfile,
    calibration: CalibrationRecord,
) -> List[ScoredCandidate]:
    """Predicted accuracy and parameter counts for every candidate."""
    layout = _layout(source)
    scored = []
    for cand in candidates:
        p_train, p_total = layout.count(cand.kept, cand.frozen, cand.rank)
        scored.append(
            ScoredCandidate(cand, predict_accuracy(cand, importance, calibration), p_train, p_total)
        )
    return scored


def select(  # pylint: disable=too-many-arguments
    candidates: Sequence[CandidateConfig],
    source: LayoutSource,
    importance: ImportanceProfile,
    calibration: CalibrationRecord,
    f_max: float,
    eps_gain: float,
    seed: int = 0,
    forced_rank: Optional[int] = None,
) -> CdwfPlan:
    """Pick the configuration to fine-tune under the budget.

    Candidates above ``f_max`` are discarded. Among the rest, every candidate
    whose predicted accuracy is at least (best - eps_gain) is near-best; the
    near-best candidate with the smallest trainable fraction wins, then the
    smaller k, then the smaller rank.

    Raises:
        CdwfError: If f_max is outside (0, 1], eps_gain < 0 or no candidates are given
        InfeasibleBudgetError: If no candidate fits, naming the smallest fraction
    """
    if not 0.0 < f_max <= 1.0:
        raise CdwfError(f"f_max must lie in (0, 1], got {f_max}")
    if eps_gain < 0:
        raise CdwfError(f"eps_gain must be >= 0, got {eps_gain}")
    if not candidates:
        raise CdwfError("No candidates to select from")
    if calibration.g_max < 0:
        logger.warning(
            "Warm-start accuracy %.4f exceeds reference %.4f; clamping g_max to 0",
            calibration.a_warm,
            calibration.a_ref,
        )

    scored = score_candidates(candidates, source, importance, calibration)
    feasible = [s for s in scored if s.fraction <= f_max]
    if not feasible:
        raise InfeasibleBudgetError(f_max, min(s.fraction for s in scored))

    best = max(s.predicted_accuracy for s in feasible)
    near_best = [s for s in feasible if s.predicted_accuracy >= best - eps_gain]
    chosen = min(near_best, key=ScoredCandidate.preference_key)
    for s in feasible:
        logger.debug(
            "candidate %s: pred=%.6f frac=%.6f",
            s.config.architecture(),
            s.predicted_accuracy,
            s.fraction,
        )
    logger.info(
        "f_max=%g: chose %s (k=%d, r=%d) pred=%.4f frac=%.4f from %d feasible of %d",
        f_max,
        chosen.config.architecture(),
        chosen.config.k,
        chosen.config.rank,
        chosen.predicted_accuracy,
        chosen.fraction,
        len(feasible),
        len(scored),
    )
    return CdwfPlan(
        config=chosen.config,
        predicted_accuracy=chosen.predicted_accuracy,
        trainable_fraction=chosen.fraction,
        p_train=chosen.p_train,
        p_total=chosen.p_total,
        importance=importance,
        calibration=calibration,
        f_max=f_max,
        eps_gain=eps_gain,
        seed=seed,
        forced_rank=forced_rank,
    )
