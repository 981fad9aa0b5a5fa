"""Report assembly and emission: JSON, aligned text tables and CSV series."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd

from warm_freeze.artifacts import PathLike, write_json, write_text
from warm_freeze.exceptions import ArtifactError
from warm_freeze.metrics import param_reduction, retention
from warm_freeze.reporting.models import MethodResult, ReportRow, RunReport

logger = logging.getLogger(__name__)

TABLE_COLUMNS = [
    "method",
    "test_acc",
    "test_auc",
    "retention",
    "param_count",
    "param_reduction",
    "chosen_k",
    "chosen_r",
    "trainable_pct",
    "architecture",
    "predicted_accuracy",
    "prediction_error",
]


def reference_result(results: Sequence[MethodResult]) -> MethodResult:
    """The single full fine-tuning result.

    Raises:
        ArtifactError: If there is no full fine-tuning result or more than one
    """
    full = [r for r in results if r.kind == "full"]
    if len(full) != 1:
        raise ArtifactError(
            f"A report needs exactly one full fine-tuning row, found {len(full)}"
        )
    return full[0]


def derive_row(result: MethodResult, reference: MethodResult) -> ReportRow:
    """Recompute the derived columns of ``result`` against the reference row."""
    prediction_error = None
    if result.predicted_accuracy is not None and result.realised_accuracy is not None:
        prediction_error = 100.0 * abs(result.predicted_accuracy - result.realised_accuracy)
    return ReportRow(
        method=result.method,
        test_acc=result.test_acc,
        test_auc=result.test_auc,
        retention=retention(result.test_auc, reference.test_auc),
        param_count=result.p_train,
        param_reduction=param_reduction(reference.p_train, result.p_train),
        chosen_k=result.chosen_k,
        chosen_r=result.chosen_r,
        trainable_pct=100.0 * result.p_train / result.p_total,
        architecture=result.architecture,
        predicted_accuracy=result.predicted_accuracy,
        prediction_error=prediction_error,
        wall_time=result.wall_time,
    )


def build_report(
    results: Sequence[MethodResult],
    config: Dict[str, Any],
    artifacts: Dict[str, str],
    include_wall_time: bool = False,
) -> RunReport:
    """Order the results and derive retention against the full fine-tuning row.

    Raises:
        ArtifactError: If the reference row is missing or duplicated, or a method repeats
    """
    reference = reference_result(results)
    methods = [r.method for r in results]
    duplicates = sorted({m for m in methods if methods.count(m) > 1})
    if duplicates:
        raise ArtifactError(f"Duplicate methods in report: {duplicates}")
    ordered = sorted(results, key=MethodResult.sort_key)
    rows = [derive_row(r, reference) for r in ordered]
    return RunReport(rows, config, dict(sorted(artifacts.items())), include_wall_time)


def report_frame(report: RunReport) -> pd.DataFrame:
    columns = TABLE_COLUMNS + (["wall_time"] if report.include_wall_time else [])
    return pd.DataFrame(
        [r.to_dict(report.include_wall_time) for r in report.rows], columns=columns
    )


def format_table(report: RunReport) -> str:
    """Aligned plain-text table: percentages to two decimals, reduction as a factor."""
    frame = report_frame(report)
    formatters = {
        "test_acc": lambda v: f"{100 * v:.2f}",
        "test_auc": lambda v: f"{100 * v:.2f}",
        "retention": lambda v: f"{v:.2f}",
        "param_reduction": lambda v: f"{v:.2f}x",
        "trainable_pct": lambda v: f"{v:.2f}",
        "predicted_accuracy": lambda v: "-" if pd.isna(v) else f"{100 * v:.2f}",
        "prediction_error": lambda v: "-" if pd.isna(v) else f"{v:.2f}",
        "chosen_k": lambda v: "-" if pd.isna(v) else str(int(v)),
        "chosen_r": lambda v: "-" if pd.isna(v) else str(int(v)),
        "wall_time": lambda v: f"{v:.1f}",
    }
    return frame.to_string(index=False, formatters=formatters) + "\n"


def epoch_frame(results: Sequence[MethodResult]) -> pd.DataFrame:
    """Long-format validation accuracy per epoch: method, phase, epoch, val_accuracy."""
    records = [
        {
            "method": r.method,
            "phase": h["phase"],
            "epoch": h["epoch"],
            "val_accuracy": h["val_accuracy"],
        }
        for r in sorted(results, key=MethodResult.sort_key)
        for h in r.history
    ]
    return pd.DataFrame(records, columns=["method", "phase", "epoch", "val_accuracy"])


def importance_frame(results: Sequence[MethodResult]) -> pd.DataFrame:
    """Block importance per CDWF budget with each block's role in the chosen plan."""
    records: List[Dict[str, Any]] = []
    for r in sorted(results, key=MethodResult.sort_key):
        if r.kind != "cdwf":
            continue
        kept = set(r.kept)
        for block, value in enumerate(r.importances):
            records.append(
                {
                    "method": r.method,
                    "budget": r.budget,
                    "block": block,
                    "importance": value,
                    "selected_as": "kept" if block in kept else "lora",
                }
            )
    return pd.DataFrame(
        records, columns=["method", "budget", "block", "importance", "selected_as"]
    )


def write_report(
    report: RunReport, results: Sequence[MethodResult], out_dir: PathLike, name: str = "report"
) -> Dict[str, Path]:
    """Write ``<name>.json``, ``<name>.txt``, ``<name>.epochs.csv`` and ``<name>.importance.csv``.

    Returns:
        Mapping of artifact label to written path
    """
    out = Path(out_dir)
    paths = {
        "json": out / f"{name}.json",
        "table": out / f"{name}.txt",
        "epochs": out / f"{name}.epochs.csv",
        "importance": out / f"{name}.importance.csv",
    }
    write_json(paths["json"], report.to_dict())
    write_text(paths["table"], format_table(report))
    write_text(paths["epochs"], epoch_frame(results).to_csv(index=False, lineterminator="\n"))
    write_text(
        paths["importance"], importance_frame(results).to_csv(index=False, lineterminator="\n")
    )
    logger.info("Wrote %d-row report to %s", len(report.rows), out)
    return paths
