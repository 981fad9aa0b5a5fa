"""Training stages around the search: warm-start, configuration, fine-tuning, baselines.

All stages share one cosine schedule per run. Warm-start covers the first
``e_warm`` epochs of a curve spanning ``e_warm + e_ft`` epochs and
fine-tuning continues it; shuffles are keyed by the global epoch index.
"""

import copy
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

from warm_freeze.cdwf.importance import compute_importance
from warm_freeze.cdwf.models import CalibrationRecord, CandidateConfig, CdwfPlan, ImportanceProfile
from warm_freeze.cdwf.search import enumerate_candidates, select
from warm_freeze.config.models import CdwfConfig, TrainingConfig
from warm_freeze.exceptions import CdwfError, ConfigurationConflictError
from warm_freeze.nn.network import NetworkModel
from warm_freeze.nn.optim import CosineSchedule, TrainState
from warm_freeze.nn.training import ArraySplit, EpochRecord, fit, steps_per_epoch
from warm_freeze.simulation.rng import substream

logger = logging.getLogger(__name__)


@dataclass
class PhaseOutcome:
    """A trained model with its per-epoch history and optimizer position."""

    model: NetworkModel
    history: List[EpochRecord]
    state: TrainState
    schedule: CosineSchedule
    seconds: float = 0.0

    @property
    def final_accuracy(self) -> float:
        """Last-epoch validation accuracy."""
        return self.history[-1].val_accuracy


@dataclass
class CdwfOutcome:
    """Result of one budget: the plan, the fine-tuned model and both phase histories."""

    plan: CdwfPlan
    model: NetworkModel
    warm_history: List[EpochRecord]
    ft_history: List[EpochRecord]
    seconds: float = 0.0

    @property
    def final_accuracy(self) -> float:
        return self.ft_history[-1].val_accuracy

    @property
    def history(self) -> List[EpochRecord]:
        return self.warm_history + self.ft_history


@dataclass
class CdwfSweep:
    """Shared warm-start and importance with one outcome per budget."""

    warm: PhaseOutcome
    importance: ImportanceProfile
    calibration: CalibrationRecord
    outcomes: List[CdwfOutcome] = field(default_factory=list)


def _check_data(train: ArraySplit, val: ArraySplit) -> None:
    if len(train) == 0 or len(val) == 0:
        raise CdwfError(f"Training needs non-empty data (train={len(train)}, val={len(val)})")


def make_schedule(config: TrainingConfig, n_train: int, total_epochs: int) -> CosineSchedule:
    return CosineSchedule(config.lr, total_epochs * steps_per_epoch(n_train, config.batch_size))


def _train_phase(  # pylint: disable=too-many-arguments
    model: NetworkModel,
    train: ArraySplit,
    val: ArraySplit,
    config: TrainingConfig,
    seed: int,
    epochs: int,
    schedule: CosineSchedule,
    phase: str,
    schedule_step: int = 0,
    first_epoch: int = 0,
) -> PhaseOutcome:
    started = time.perf_counter()
    state = TrainState.for_parameters(model.trainable_parameters(), config, schedule_step)
    history = fit(
        model, train, val, epochs, state, schedule, config, seed, phase, first_epoch=first_epoch
    )
    return PhaseOutcome(model, history, state, schedule, time.perf_counter() - started)


def warm_start(  # pylint: disable=too-many-arguments
    model: NetworkModel,
    train: ArraySplit,
    val: ArraySplit,
    config: TrainingConfig,
    seed: int,
    e_warm: Optional[int] = None,
    total_epochs: Optional[int] = None,
) -> PhaseOutcome:
    """Train every parameter for ``e_warm`` epochs; a_warm is the last validation accuracy.

    Args:
        model: Network with every block trainable and no adapters
        train: Training split
        val: Validation split
        config: Optimizer settings
        seed: Run seed for shuffling
        e_warm: Warm-start epochs (defaults to ``config.e_warm``)
        total_epochs: Length of the shared schedule (defaults to e_warm + ``config.e_ft``)

    Raises:
        CdwfError: If e_warm < 1, the data is empty, or a block is frozen or adapted
    """
    e_warm = config.e_warm if e_warm is None else e_warm
    if e_warm < 1:
        raise CdwfError(f"Warm-start needs at least one epoch, got {e_warm}")
    _check_data(train, val)
    if model.lora_ranks() or not all(model.group_trainable(i) for i in range(model.n_blocks)):
        raise CdwfError("Warm-start requires every block trainable and no adapters")
    total = total_epochs if total_epochs is not None else e_warm + config.e_ft
    schedule = make_schedule(config, len(train), total)
    outcome = _train_phase(model, train, val, config, seed, e_warm, schedule, "warm")
    logger.info("Warm-start done: a_warm=%.4f after %d epochs", outcome.final_accuracy, e_warm)
    return outcome


def apply_config(
    model: NetworkModel,
    plan: Union[CdwfPlan, CandidateConfig],
    seed: int,
    alpha: Optional[float] = None,
) -> NetworkModel:
    """Keep K trainable, freeze F with rank-r adapters, freeze anything else.

    Adapters start at zero, so the forward output is unchanged.

    Raises:
        ConfigurationConflictError: If the model already carries adapters
        LoraAttachmentError: Propagated from adapter attachment
    """
    cand = plan.config if isinstance(plan, CdwfPlan) else plan
    if model.lora_ranks():
        raise ConfigurationConflictError(
            f"Model already has adapters on blocks {sorted(model.lora_ranks())}"
        )
    for index in range(model.n_blocks):
        model.set_group_trainable(index, index in cand.kept)
    for _, param in model.head_parameters():
        param.trainable = True
    if cand.frozen:
        model.attach_lora(cand.frozen, cand.rank, substream(seed, 0, "lora"), alpha)
    logger.info(
        "Applied %s: kept=%s frozen=%s",
        cand.architecture(),
        sorted(cand.kept),
        sorted(cand.frozen),
    )
    return model


def finetune(  # pylint: disable=too-many-arguments
    model: NetworkModel,
    train: ArraySplit,
    val: ArraySplit,
    config: TrainingConfig,
    seed: int,
    e_ft: int,
    warm: PhaseOutcome,
    phase: str = "ft",
) -> PhaseOutcome:
    """Continue the warm-start schedule for ``e_ft`` epochs over the current trainable set.

    Optimizer moments restart because the trainable set changed at apply time.
    """
    if e_ft < 1:
        raise CdwfError(f"Fine-tuning needs at least one epoch, got {e_ft}")
    _check_data(train, val)
    return _train_phase(
        model,
        train,
        val,
        config,
        seed,
        e_ft,
        warm.schedule,
        phase,
        schedule_step=warm.state.schedule_step,
        first_epoch=len(warm.history),
    )


def build_uniform_lora(
    model: NetworkModel, rank: int, seed: int, alpha: Optional[float] = None
) -> NetworkModel:
    """Freeze every block with a rank-r adapter; only the head and adapters train."""
    return apply_config(
        model, CandidateConfig(frozenset(), frozenset(range(model.n_blocks)), rank), seed, alpha
    )


def train_full(
    model: NetworkModel,
    train: ArraySplit,
    val: ArraySplit,
    config: TrainingConfig,
    seed: int,
    epochs: Optional[int] = None,
    phase: str = "full",
) -> PhaseOutcome:
    """Train every parameter over its own full-length schedule (pretraining and full FT)."""
    epochs = config.e_full if epochs is None else epochs
    _check_data(train, val)
    for index in range(model.n_blocks):
        model.set_group_trainable(index, True)
    schedule = make_schedule(config, len(train), epochs)
    return _train_phase(model, train, val, config, seed, epochs, schedule, phase)


def train_uniform_lora(  # pylint: disable=too-many-arguments
    model: NetworkModel,
    train: ArraySplit,
    val: ArraySplit,
    config: TrainingConfig,
    seed: int,
    rank: int,
    alpha: Optional[float] = None,
    epochs: Optional[int] = None,
) -> PhaseOutcome:
    """Uniform-LoRA baseline: adapters everywhere, trained for the full epoch budget."""
    epochs = config.e_full if epochs is None else epochs
    _check_data(train, val)
    build_uniform_lora(model, rank, seed, alpha)
    schedule = make_schedule(config, len(train), epochs)
    return _train_phase(model, train, val, config, seed, epochs, schedule, "lora")


def run_cdwf(  # pylint: disable=too-many-arguments,too-many-locals
    pretrained: NetworkModel,
    train: ArraySplit,
    val: ArraySplit,
    training: TrainingConfig,
    cdwf: CdwfConfig,
    a_ref: float,
    seed: int,
    budgets: Optional[Sequence[float]] = None,
    forced_rank: Optional[int] = None,
    alpha: Optional[float] = None,
    e_warm: Optional[int] = None,
    e_ft: Optional[int] = None,
) -> CdwfSweep:
    """Warm-start once, then select, apply and fine-tune for each budget.

    Every budget is selected before any fine-tuning starts, so an infeasible
    budget fails the sweep early. ``pretrained`` is left untouched.

    Raises:
        InfeasibleBudgetError: If a budget admits no candidate
    """
    budgets = list(cdwf.budgets if budgets is None else budgets)
    forced_rank = cdwf.forced_rank if forced_rank is None else forced_rank
    e_warm = training.e_warm if e_warm is None else e_warm
    e_ft = training.e_ft if e_ft is None else e_ft
    rank_set = [forced_rank] if forced_rank is not None else cdwf.rank_set

    warm = warm_start(copy.deepcopy(pretrained), train, val, training, seed, e_warm, e_warm + e_ft)
    importance = compute_importance(
        warm.model, val, cdwf.n_importance_batches, training.batch_size
    )
    calibration = CalibrationRecord(a_warm=warm.final_accuracy, a_ref=a_ref)
    candidates = enumerate_candidates(importance, rank_set, warm.model.n_blocks)
    layout = warm.model.layout()
    plans = [
        select(
            candidates,
            layout,
            importance,
            calibration,
            f_max,
            cdwf.eps_gain,
            seed=seed,
            forced_rank=forced_rank,
        )
        for f_max in budgets
    ]

    warn_if_k_decreases(plans)
    sweep = CdwfSweep(warm, importance, calibration)
    for plan in plans:
        model = apply_config(copy.deepcopy(warm.model), plan, seed, alpha)
        tuned = finetune(model, train, val, training, seed, e_ft, warm)
        sweep.outcomes.append(
            CdwfOutcome(
                plan, tuned.model, warm.history, tuned.history, warm.seconds + tuned.seconds
            )
        )
        logger.info(
            "f_max=%g: predicted %.4f, realised %.4f",
            plan.f_max,
            plan.predicted_accuracy,
            tuned.final_accuracy,
        )
    return sweep


def warn_if_k_decreases(plans: Sequence[CdwfPlan]) -> bool:
    """Log a warning for every pair of budgets where a larger budget keeps fewer blocks.

    Returns:
        True if any decrease was found
    """
    ordered = sorted(plans, key=lambda p: p.f_max)
    found = False
    for smaller, larger in zip(ordered, ordered[1:]):
        if larger.f_max > smaller.f_max and larger.config.k < smaller.config.k:
            logger.warning(
                "Chosen k fell from %d to %d as the budget grew from %g to %g",
                smaller.config.k,
                larger.config.k,
                smaller.f_max,
                larger.f_max,
            )
            found = True
    return found
