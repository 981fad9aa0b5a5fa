"""Command implementations behind the CLI verbs.

Every command reads and writes artifacts under the configured output
directory::

    data/<kind>.cdwf, data/<kind>.manifest.json
    checkpoints/pretrained-bias.cdwm, checkpoints/<kind>-<method>.cdwm
    reference/<kind>.json
    plans/<kind>-<method>.json
    rows/<kind>/<method>.json
    evals/<kind>-<method>.json
    reports/<kind>.{json,txt,epochs.csv,importance.csv}
"""

import copy
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from warm_freeze.artifacts import read_json, sha256_file, write_json
from warm_freeze.cdwf import CdwfOutcome, run_cdwf, train_full, train_uniform_lora
from warm_freeze.config.models import AttackKind, RunConfig
from warm_freeze.dataset import (
    DatasetManifest,
    Split,
    build_dataset,
    read_dataset,
    split_arrays,
    write_dataset,
    write_manifest_json,
)
from warm_freeze.exceptions import ArtifactError, ConfigError
from warm_freeze.metrics import EvalResult, evaluate_scores
from warm_freeze.nn import ArraySplit, NetworkModel, build_network, predict_proba
from warm_freeze.nn.checkpoint import load_checkpoint, save_checkpoint
from warm_freeze.reporting import MethodResult, build_report, write_report

logger = logging.getLogger(__name__)

PRETRAIN_KIND = AttackKind.BIAS
FULL_METHOD = "full-ft"


@dataclass(frozen=True)
class RunPaths:
    """Artifact locations under one output directory."""

    root: Path

    def dataset(self, kind: str) -> Path:
        return self.root / "data" / f"{kind}.cdwf"

    def manifest(self, kind: str) -> Path:
        return self.root / "data" / f"{kind}.manifest.json"

    def pretrained(self) -> Path:
        return self.root / "checkpoints" / f"pretrained-{PRETRAIN_KIND.value}.cdwm"

    def checkpoint(self, kind: str, method: str) -> Path:
        return self.root / "checkpoints" / f"{kind}-{method}.cdwm"

    def reference(self, kind: str) -> Path:
        return self.root / "reference" / f"{kind}.json"

    def plan(self, kind: str, method: str) -> Path:
        return self.root / "plans" / f"{kind}-{method}.json"

    def rows(self, kind: str) -> Path:
        return self.root / "rows" / kind

    def row(self, kind: str, method: str) -> Path:
        return self.rows(kind) / f"{method}.json"

    def evaluation(self, kind: str, method: str) -> Path:
        return self.root / "evals" / f"{kind}-{method}.json"

    def reports(self) -> Path:
        return self.root / "reports"

    def resolved_config(self) -> Path:
        return self.root / "config.resolved.yml"


@dataclass(frozen=True)
class TaskData:
    train: ArraySplit
    val: ArraySplit
    test: ArraySplit
    manifest: DatasetManifest


def paths_for(config: RunConfig) -> RunPaths:
    return RunPaths(Path(config.output_dir))


def load_task(config: RunConfig, kind: str) -> TaskData:
    """Read the stored dataset of ``kind`` and split it into network inputs.

    Raises:
        ArtifactError: If the dataset has not been generated
    """
    path = paths_for(config).dataset(kind)
    if not path.exists():
        raise ArtifactError(f"No {kind} dataset at {path}; run gen-data --attack {kind}", str(path))
    records, manifest = read_dataset(path)
    arrays = {}
    for split in Split:
        x, y, _ = split_arrays(records, split)
        arrays[split] = ArraySplit(x, y)
    return TaskData(arrays[Split.TRAIN], arrays[Split.VAL], arrays[Split.TEST], manifest)


def evaluate(model: NetworkModel, test: ArraySplit) -> EvalResult:
    """Test accuracy and AUC of ``model``."""
    return evaluate_scores(predict_proba(model, test.x), test.y)


def _load_pretrained(config: RunConfig) -> NetworkModel:
    path = paths_for(config).pretrained()
    if not path.exists():
        raise ArtifactError(f"No pretrained checkpoint at {path}; run pretrain first", str(path))
    model, _ = load_checkpoint(path)
    return model


def _kind(config: RunConfig, kind: Optional[AttackKind]) -> str:
    return AttackKind(kind or config.attack_kind).value


def _save_result(config: RunConfig, result: MethodResult, group: Optional[str] = None) -> Path:
    path = paths_for(config).row(group or result.attack_kind, result.method)
    write_json(path, result.to_dict())
    return path


def cmd_gen_data(config: RunConfig, kind: Optional[AttackKind] = None) -> DatasetManifest:
    """Generate, split, normalize and store the paired dataset of one attack kind."""
    task = _kind(config, kind)
    paths = paths_for(config)
    records, manifest = build_dataset(config, AttackKind(task))
    write_dataset(records, manifest, paths.dataset(task))
    write_manifest_json(manifest, paths.manifest(task))
    logger.info("Wrote %d records to %s", len(records), paths.dataset(task))
    return manifest


def cmd_pretrain(config: RunConfig) -> EvalResult:
    """Train a fresh network on bias detection for e_full epochs and checkpoint it.

    Returns:
        Test metrics of the pretrained model on the bias task
    """
    data = load_task(config, PRETRAIN_KIND.value)
    model = build_network(config.model, config.seed)
    outcome = train_full(
        model, data.train, data.val, config.training, config.seed, phase="pretrain"
    )
    result = evaluate(outcome.model, data.test)
    save_checkpoint(
        outcome.model,
        paths_for(config).pretrained(),
        {"task": PRETRAIN_KIND.value, "seed": config.seed, "val_accuracy": outcome.final_accuracy},
    )
    logger.info(
        "Pretrained on %s: val_acc=%.4f test_acc=%.4f test_auc=%.4f",
        PRETRAIN_KIND.value,
        outcome.final_accuracy,
        result.accuracy,
        result.auc,
    )
    return result


def read_reference(config: RunConfig, kind: str) -> Dict[str, Any]:
    """The stored full fine-tuning reference of ``kind``.

    Raises:
        ArtifactError: If train-ref has not been run for this task
    """
    return read_json(paths_for(config).reference(kind))


def cmd_train_ref(config: RunConfig, kind: Optional[AttackKind] = None) -> MethodResult:
    """Full fine-tuning from the pretrained checkpoint; records a_ref and the reference row."""
    task = _kind(config, kind)
    paths = paths_for(config)
    data = load_task(config, task)
    model = _load_pretrained(config)
    outcome = train_full(model, data.train, data.val, config.training, config.seed)
    metrics = evaluate(outcome.model, data.test)
    layout = outcome.model.layout()
    result = MethodResult(
        method=FULL_METHOD,
        kind="full",
        attack_kind=task,
        seed=config.seed,
        test_acc=metrics.accuracy,
        test_auc=metrics.auc,
        n_test=metrics.n_examples,
        p_train=layout.total,
        p_total=layout.total,
        architecture="All trainable",
        chosen_k=outcome.model.n_blocks,
        realised_accuracy=outcome.final_accuracy,
        wall_time=outcome.seconds,
        history=[h.to_dict() for h in outcome.history],
        kept=list(range(outcome.model.n_blocks)),
    )
    write_json(
        paths.reference(task),
        {
            "attack_kind": task,
            "seed": config.seed,
            "a_ref": outcome.final_accuracy,
            "e_full": config.training.e_full,
            "test": metrics.to_dict(),
        },
    )
    save_checkpoint(
        outcome.model, paths.checkpoint(task, FULL_METHOD), {"a_ref": outcome.final_accuracy}
    )
    _save_result(config, result)
    logger.info(
        "Reference for %s: a_ref=%.4f test_auc=%.4f", task, outcome.final_accuracy, metrics.auc
    )
    return result


def cdwf_method_name(
    f_max: float, forced_rank: Optional[int] = None, e_warm: Optional[int] = None
) -> str:
    """Row label such as ``cdwf@0.05``, ``cdwf@0.05-r4`` or ``cdwf@0.05-w2``."""
    name = f"cdwf@{f_max:g}"
    if forced_rank is not None:
        name += f"-r{forced_rank}"
    if e_warm is not None:
        name += f"-w{e_warm}"
    return name


def _cdwf_result(
    config: RunConfig, task: str, outcome: CdwfOutcome, method: str, e_warm: int, test: ArraySplit
) -> MethodResult:
    plan = outcome.plan
    metrics = evaluate(outcome.model, test)
    cand = plan.config
    return MethodResult(
        method=method,
        kind="cdwf",
        attack_kind=task,
        seed=config.seed,
        test_acc=metrics.accuracy,
        test_auc=metrics.auc,
        n_test=metrics.n_examples,
        p_train=plan.p_train,
        p_total=plan.p_total,
        architecture=cand.architecture(),
        chosen_k=cand.k,
        chosen_r=cand.rank if cand.frozen else None,
        budget=plan.f_max,
        predicted_accuracy=plan.predicted_accuracy,
        realised_accuracy=outcome.final_accuracy,
        e_warm=e_warm,
        wall_time=outcome.seconds,
        history=[h.to_dict() for h in outcome.history],
        importances=list(plan.importance.i),
        kept=sorted(cand.kept),
        frozen=sorted(cand.frozen),
    )


def cmd_run_cdwf(  # pylint: disable=too-many-arguments,too-many-locals
    config: RunConfig,
    kind: Optional[AttackKind] = None,
    budgets: Optional[Sequence[float]] = None,
    forced_rank: Optional[int] = None,
    e_warm: Optional[int] = None,
    e_ft: Optional[int] = None,
    row_group: Optional[str] = None,
) -> List[MethodResult]:
    """Warm-start, search, apply and fine-tune for each budget; writes plans, rows and checkpoints.

    Raises:
        ArtifactError: If the pretrained checkpoint, dataset or reference is missing
        InfeasibleBudgetError: If a budget admits no candidate
    """
    task = _kind(config, kind)
    paths = paths_for(config)
    data = load_task(config, task)
    reference = read_reference(config, task)
    pretrained = _load_pretrained(config)
    forced_rank = config.cdwf.forced_rank if forced_rank is None else forced_rank
    e_warm = config.training.e_warm if e_warm is None else e_warm
    e_ft = config.training.e_ft if e_ft is None else e_ft

    sweep = run_cdwf(
        pretrained,
        data.train,
        data.val,
        config.training,
        config.cdwf,
        float(reference["a_ref"]),
        config.seed,
        budgets=budgets,
        forced_rank=forced_rank,
        alpha=config.model.lora_alpha,
        e_warm=e_warm,
        e_ft=e_ft,
    )
    results = []
    for outcome in sweep.outcomes:
        method = cdwf_method_name(
            outcome.plan.f_max, forced_rank, e_warm if row_group else None
        )
        result = _cdwf_result(config, task, outcome, method, e_warm, data.test)
        plan = replace(
            outcome.plan,
            extra={
                "attack_kind": task,
                "e_warm": e_warm,
                "e_ft": e_ft,
                "realised_accuracy": outcome.final_accuracy,
            },
        )
        write_json(paths.plan(task, method), plan.to_dict())
        save_checkpoint(outcome.model, paths.checkpoint(task, method), {"plan": method})
        _save_result(config, result, row_group)
        results.append(result)
    return results


def cmd_run_lora(
    config: RunConfig, kind: Optional[AttackKind] = None, ranks: Optional[Sequence[int]] = None
) -> List[MethodResult]:
    """Uniform-LoRA baselines from the pretrained checkpoint, one row per rank."""
    task = _kind(config, kind)
    paths = paths_for(config)
    data = load_task(config, task)
    pretrained = _load_pretrained(config)
    results = []
    for rank in ranks or config.cdwf.rank_set:
        outcome = train_uniform_lora(
            copy.deepcopy(pretrained),
            data.train,
            data.val,
            config.training,
            config.seed,
            rank,
            config.model.lora_alpha,
        )
        metrics = evaluate(outcome.model, data.test)
        p_train = sum(p.size for _, p in outcome.model.trainable_parameters())
        method = f"lora-r{rank}"
        result = MethodResult(
            method=method,
            kind="lora",
            attack_kind=task,
            seed=config.seed,
            test_acc=metrics.accuracy,
            test_auc=metrics.auc,
            n_test=metrics.n_examples,
            p_train=p_train,
            p_total=outcome.model.layout().total,
            architecture=f"All LoRA-r{rank}",
            chosen_k=0,
            chosen_r=rank,
            realised_accuracy=outcome.final_accuracy,
            wall_time=outcome.seconds,
            history=[h.to_dict() for h in outcome.history],
            frozen=list(range(outcome.model.n_blocks)),
        )
        save_checkpoint(outcome.model, paths.checkpoint(task, method), {"rank": rank})
        _save_result(config, result)
        results.append(result)
    return results


def cmd_eval(config: RunConfig, method: str, kind: Optional[AttackKind] = None) -> EvalResult:
    """Re-evaluate a stored checkpoint on the test split."""
    task = _kind(config, kind)
    paths = paths_for(config)
    path = paths.checkpoint(task, method)
    if not path.exists():
        raise ArtifactError(f"No checkpoint for {method} on {task} at {path}", str(path))
    model, _ = load_checkpoint(path)
    result = evaluate(model, load_task(config, task).test)
    write_json(paths.evaluation(task, method), result.to_dict())
    return result


def load_results(directory: Path) -> List[MethodResult]:
    """All stored method results in ``directory``, in file-name order."""
    if not directory.is_dir():
        raise ArtifactError(f"No results in {directory}", str(directory))
    return [MethodResult.from_dict(read_json(p)) for p in sorted(directory.glob("*.json"))]


def _artifact_hashes(paths: RunPaths, task: str, results: Sequence[MethodResult]) -> Dict[str, str]:
    candidates = [
        paths.dataset(task),
        paths.dataset(PRETRAIN_KIND.value),
        paths.pretrained(),
        paths.reference(task),
    ] + [paths.plan(task, r.method) for r in results if r.kind == "cdwf"]
    return {
        str(p.relative_to(paths.root)): sha256_file(p) for p in candidates if p.exists()
    }


def cmd_report(
    config: RunConfig, kind: Optional[AttackKind] = None, name: Optional[str] = None
) -> Dict[str, Path]:
    """Assemble every stored row of a task into report tables and CSV series.

    Raises:
        ArtifactError: If no rows exist or the full fine-tuning row is missing
    """
    task = _kind(config, kind)
    paths = paths_for(config)
    results = load_results(paths.rows(task))
    report = build_report(
        results,
        config.to_dict(),
        _artifact_hashes(paths, task, results),
        config.report.include_wall_time,
    )
    return write_report(report, results, paths.reports(), name or task)


def cmd_sweep_warm(
    config: RunConfig,
    kind: Optional[AttackKind] = None,
    warm_epochs: Optional[Sequence[int]] = None,
    budget: Optional[float] = None,
) -> Dict[str, Path]:
    """Vary warm-start length at a fixed total epoch budget and report each run.

    Raises:
        ConfigError: If a warm-start length leaves no fine-tuning epoch
    """
    task = _kind(config, kind)
    paths = paths_for(config)
    total = config.training.e_warm + config.training.e_ft
    warm_list = list(warm_epochs or config.cdwf.warm_sweep)
    f_max = budget if budget is not None else config.cdwf.budgets[0]
    bad = [w for w in warm_list if not 1 <= w < total]
    if bad:
        raise ConfigError(f"Warm-start lengths {bad} must lie in 1..{total - 1}")

    results = [MethodResult.from_dict(read_json(paths.row(task, FULL_METHOD)))]
    for e_warm in warm_list:
        logger.info("Warm sweep: e_warm=%d, e_ft=%d", e_warm, total - e_warm)
        results.extend(
            cmd_run_cdwf(
                config,
                AttackKind(task),
                [f_max],
                e_warm=e_warm,
                e_ft=total - e_warm,
                row_group=f"{task}-warm-sweep",
            )
        )
    report = build_report(
        results, config.to_dict(), _artifact_hashes(paths, task, results), include_wall_time=True
    )
    return write_report(report, results, paths.reports(), f"{task}-warm-sweep")

