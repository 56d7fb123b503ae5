"""
Machine-readable benchmark reports.

CSV columns are fixed: dataset, decomposition, optimizer, seed, batch_index,
final_loss, iterations, wall_time_s, q, stop_reason. Losses and rates carry
six significant digits, times three decimals, and an undefined rate is an
empty field (``null`` in JSON).
"""

from __future__ import annotations

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

from .metrics import summary_tables
from .runner import REPORT_COLUMNS, CellResult, cells_frame

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class ReportFormat(Enum):
    CSV = "csv"
    JSON = "json"

    @classmethod
    def parse(cls, value: Union[str, ReportFormat]) -> ReportFormat:
        if isinstance(value, ReportFormat):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown report format: {value!r}") from None


def format_loss(value: Optional[float]) -> str:
    return "" if value is None or pd.isna(value) else f"{value:.6g}"


def format_time(value: Optional[float]) -> str:
    return "" if value is None or pd.isna(value) else f"{value:.3f}"


def _round_loss(value: Optional[float]) -> Optional[float]:
    return None if value is None or pd.isna(value) else float(f"{value:.6g}")


def _round_time(value: Optional[float]) -> Optional[float]:
    return None if value is None or pd.isna(value) else round(float(value), 3)


def report_table(cells: Sequence[CellResult]) -> pd.DataFrame:
    """The CSV table as strings, rows in cell-key order."""
    frame = cells_frame(sorted(cells, key=lambda cell: cell.key))
    if frame.empty:
        return pd.DataFrame(columns=REPORT_COLUMNS)
    return frame.assign(
        final_loss=frame["final_loss"].map(format_loss),
        iterations=frame["iterations"].map(lambda v: "" if pd.isna(v) else str(int(v))),
        wall_time_s=frame["wall_time_s"].map(format_time),
        q=frame["q"].map(format_loss),
    )


def report_records(cells: Sequence[CellResult], histories: bool = False) -> List[Dict[str, Any]]:
    """JSON rows: the CSV schema plus relative error, the failure message and optional histories."""
    records = []
    for cell in sorted(cells, key=lambda c: c.key):
        report = cell.report
        record: Dict[str, Any] = {
            "dataset": cell.dataset,
            "decomposition": cell.decomposition,
            "optimizer": cell.optimizer,
            "seed": cell.seed,
            "batch_index": cell.batch_index,
            "final_loss": None if report is None else _round_loss(report.final_loss),
            "iterations": None if report is None else report.iterations,
            "wall_time_s": None if report is None else _round_time(report.wall_time_seconds),
            "q": None if report is None else _round_loss(report.convergence_rate_q),
            "stop_reason": cell.stop_reason,
            "relative_error": _round_loss(cell.relative_error),
        }
        if cell.error or (report is not None and report.message):
            record["message"] = cell.error or report.message
        if histories:
            record["loss_history"] = (
                [] if report is None else [_round_loss(v) for v in report.loss_history]
            )
        records.append(record)
    return records


def render_report(
    cells: Sequence[CellResult], fmt: Union[str, ReportFormat] = ReportFormat.CSV, *, histories: bool = False
) -> str:
    fmt = ReportFormat.parse(fmt)
    if fmt is ReportFormat.CSV:
        return report_table(cells).to_csv(index=False, lineterminator="\n")
    return json.dumps(report_records(cells, histories), indent=2, allow_nan=False) + "\n"


def emit_report(
    cells: Sequence[CellResult],
    fmt: Union[str, ReportFormat],
    path: PathLike,
    *,
    histories: bool = False,
) -> Path:
    """
    Write the per-cell report.

    Parameters
    ----------
    cells : Sequence[CellResult]
        Benchmark cells, in any order.
    fmt : str or ReportFormat
        ``csv`` or ``json``.
    path : str or Path
        Destination; parent directories are created.
    histories : bool
        Include each run's loss history (JSON only).

    Raises
    ------
    OSError
        If the path cannot be written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(cells, fmt, histories=histories), encoding="utf-8")
    logger.info("wrote %d row(s) to %s", len(cells), path)
    return path


def write_summary(aggregates: pd.DataFrame, path: PathLike) -> Path:
    """
    Write the per-(dataset, decomposition, optimizer) means.

    A ``.xlsx`` path gets one sheet per statistic (decompositions x
    optimizers); anything else gets the long table as CSV.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".xlsx":
        with pd.ExcelWriter(path, engine="openpyxl") as writer:
            for name, table in summary_tables(aggregates).items():
                table.to_excel(writer, sheet_name=name)
    else:
        aggregates.to_csv(path, index=False, lineterminator="\n")
    logger.info("wrote summary to %s", path)
    return path
