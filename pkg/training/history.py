"""Metrics log written as CSV."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Iterator, List, Optional

from fileio import write_atomic


def _clock(seconds: float) -> str:
    seconds = max(0, int(round(seconds)))
    hours, rem = divmod(seconds, 3600)
    minutes, secs = divmod(rem, 60)
    return f"{hours}:{minutes:02d}:{secs:02d}" if hours else f"{minutes:02d}:{secs:02d}"


def format_progress(elapsed: float, done: int, total: int) -> str:
    """Wall time so far and the remaining time at the current iteration rate."""
    if done <= 0:
        return f"{_clock(elapsed)} elapsed"
    remaining = elapsed / done * max(0, total - done)
    return f"{_clock(elapsed)} elapsed, {_clock(remaining)} left"


@dataclass(frozen=True)
class HistoryRow:
    iteration: int
    loss: float
    ce_lane: float
    ce_type: float
    reg: float
    val_acc_lane: Optional[float] = None
    val_acc_type: Optional[float] = None
    ale: Optional[float] = None


COLUMNS = tuple(f.name for f in fields(HistoryRow))


def _cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


class MetricsHistory:
    def __init__(self) -> None:
        self._rows: List[HistoryRow] = []

    def append(self, row: HistoryRow) -> None:
        self._rows.append(row)

    def __len__(self) -> int:
        return len(self._rows)

    def __iter__(self) -> Iterator[HistoryRow]:
        return iter(self._rows)

    @property
    def rows(self) -> List[HistoryRow]:
        return list(self._rows)

    def validation_rows(self) -> List[HistoryRow]:
        return [row for row in self._rows if row.val_acc_lane is not None]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self._rows:
            writer.writerow([_cell(value) for value in astuple(row)])
        return buffer.getvalue()

    def save(self, path: str | Path) -> Path:
        return write_atomic(path, self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "MetricsHistory":
        history = cls()
        for record in csv.DictReader(io.StringIO(text)):
            values = {
                name: (None if record[name] == "" else float(record[name])) for name in COLUMNS if name != "iteration"
            }
            history.append(HistoryRow(iteration=int(record["iteration"]), **values))
        return history
