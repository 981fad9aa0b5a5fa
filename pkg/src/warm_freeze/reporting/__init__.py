"""Run reports: per-method results, derived tables and CSV series."""

from .models import MethodResult, ReportRow, RunReport
from .report import (
    build_report,
    derive_row,
    epoch_frame,
    format_table,
    importance_frame,
    reference_result,
    write_report,
)

__all__ = [
    "MethodResult",
    "ReportRow",
    "RunReport",
    "build_report",
    "derive_row",
    "epoch_frame",
    "format_table",
    "importance_frame",
    "reference_result",
    "write_report",
]
