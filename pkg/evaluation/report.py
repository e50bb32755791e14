"""Scheme comparison tables: accuracy gains and ALE reduction against the first scheme."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import List, Mapping, Optional

from errors import CoverageError
from evaluation.metrics import EvalReport, LabelSet, evaluate
from fileio import write_atomic
from model.network import PredictionSet

CSV_COLUMNS = (
    "scheme",
    "lane_acc",
    "type_acc",
    "ale",
    "lane_gain",
    "type_gain",
    "ale_reduction",
    "occluded_lane_acc",
    "clean_lane_acc",
)


def ale_reduction(base: float, new: float) -> Optional[float]:
    """Percent reduction (base - new) / base; None when the base error is zero."""
    if base == 0:
        return None
    return (base - new) / base * 100.0


@dataclass(frozen=True)
class SchemeRow:
    name: str
    report: EvalReport
    lane_gain: Optional[float]
    type_gain: Optional[float]
    ale_reduction: Optional[float]


class ComparisonTable:
    def __init__(self, rows: List[SchemeRow]) -> None:
        self.rows = rows

    def __len__(self) -> int:
        return len(self.rows)

    def row(self, name: str) -> SchemeRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)

    def _cells(self, row: SchemeRow, fmt: str) -> List[str]:
        def cell(value: Optional[float], pattern: str = fmt) -> str:
            return "" if value is None else pattern.format(value)

        report = row.report
        return [
            row.name,
            cell(report.lane_accuracy * 100.0),
            cell(report.type_accuracy * 100.0),
            cell(report.ale, "{:.3f}"),
            cell(row.lane_gain, "{:+.1f}"),
            cell(row.type_gain, "{:+.1f}"),
            cell(row.ale_reduction, "{:.1f}%"),
            cell(None if report.subsets["occluded"].lane_accuracy is None else report.subsets["occluded"].lane_accuracy * 100.0),
            cell(None if report.subsets["clean"].lane_accuracy is None else report.subsets["clean"].lane_accuracy * 100.0),
        ]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(self._cells(row, "{:.2f}"))
        return buffer.getvalue()

    def to_text(self) -> str:
        """Aligned plain-text table; accuracies in percent, gains in points."""
        grid = [list(CSV_COLUMNS)] + [self._cells(row, "{:.1f}") for row in self.rows]
        widths = [max(len(line[i]) for line in grid) for i in range(len(CSV_COLUMNS))]
        lines = ["  ".join(value.ljust(width) if i == 0 else value.rjust(width) for i, (value, width) in enumerate(zip(line, widths))) for line in grid]
        return "\n".join(line.rstrip() for line in lines) + "\n"

    def save(self, path: str | Path) -> Path:
        return write_atomic(path, self.to_csv())


def compare_report(schemes: Mapping[str, PredictionSet], labels: LabelSet) -> ComparisonTable:
    """One row per scheme; gains and reductions are relative to the first scheme."""
    mismatched = [name for name, preds in schemes.items() if preds.num_vertices != labels.num_vertices]
    if mismatched:
        raise CoverageError(f"scheme(s) {', '.join(mismatched)} do not cover all {labels.num_vertices} vertices")

    rows: List[SchemeRow] = []
    base: Optional[EvalReport] = None
    for name, predictions in schemes.items():
        report = evaluate(predictions, labels)
        if base is None:
            base = report
            rows.append(SchemeRow(name, report, None, None, None))
            continue
        rows.append(
            SchemeRow(
                name,
                report,
                lane_gain=(report.lane_accuracy - base.lane_accuracy) * 100.0,
                type_gain=(report.type_accuracy - base.type_accuracy) * 100.0,
                ale_reduction=ale_reduction(base.ale, report.ale),
            )
        )
    return ComparisonTable(rows)
