"""Result tables, their CSV/text renderings and relative gains."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from ..errors import ConfigurationError, DataError


@dataclass
class ResultTable:
    """Named systems (rows) by named metrics (columns)."""

    name: str
    columns: list[str]
    rows: list[str] = field(default_factory=list)
    cells: dict[tuple[str, str], float] = field(default_factory=dict)
    meta: dict[str, str] = field(default_factory=dict)

    def set(self, row: str, column: str, value: float) -> None:
        if column not in self.columns:
            raise ConfigurationError(f"table {self.name} has no column {column!r}")
        if row not in self.rows:
            self.rows.append(row)
        self.cells[(row, column)] = float(value)

    def get(self, row: str, column: str) -> float:
        return self.cells.get((row, column), math.nan)

    def row(self, row: str) -> dict[str, float]:
        return {c: self.get(row, c) for c in self.columns}

    def __contains__(self, row: str) -> bool:
        return row in self.rows

    # -- rendering --

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k in sorted(self.meta):
            buf.write(f"# {k}: {self.meta[k]}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["system", *self.columns])
        for r in self.rows:
            w.writerow([r, *(_fmt(self.get(r, c)) for c in self.columns)])
        return buf.getvalue()

    def to_text(self) -> str:
        header = ["system", *self.columns]
        body = [[r, *(_fmt(self.get(r, c), 4) for c in self.columns)] for r in self.rows]
        widths = [max(len(line[j]) for line in [header, *body]) for j in range(len(header))]

        def line(cells):
            first = cells[0].ljust(widths[0])
            rest = [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
            return "  ".join([first, *rest]).rstrip()

        title = self.name + "".join(f"  [{k}={self.meta[k]}]" for k in sorted(self.meta))
        rule = "-" * len(line(header))
        return "\n".join([title, rule, line(header), rule, *map(line, body)]) + "\n"

    def write(self, directory: Union[str, Path]) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{self.name}.csv").write_text(self.to_csv())
        (directory / f"{self.name}.txt").write_text(self.to_text())

    @classmethod
    def from_csv(cls, path: Union[str, Path], name: Optional[str] = None) -> "ResultTable":
        path = Path(path)
        try:
            lines = path.read_text().splitlines()
        except OSError as exc:
            raise DataError(f"cannot read table {path}: {exc}") from exc
        meta = {}
        while lines and lines[0].startswith("#"):
            k, _, v = lines.pop(0)[1:].strip().partition(":")
            meta[k.strip()] = v.strip()
        reader = list(csv.reader(lines))
        if not reader or reader[0][:1] != ["system"]:
            raise DataError(f"{path}: not a result table (missing 'system' header)")
        table = cls(name or path.stem, reader[0][1:], meta=meta)
        for rec in reader[1:]:
            for c, v in zip(table.columns, rec[1:]):
                table.set(rec[0], c, float(v))
        return table


def _fmt(value: float, digits: int = 10) -> str:
    return "nan" if math.isnan(value) else f"{value:.{digits}g}"


def relative_gain(system: float, baseline: float, higher_is_better: bool) -> float:
    """Gain over the baseline in percent; nan when the baseline is 0."""
    if baseline == 0:
        return math.nan
    delta = system - baseline if higher_is_better else baseline - system
    return 100.0 * delta / baseline


def compute_gains(
    tables: Sequence[ResultTable],
    baseline_row: str,
    column: Optional[str] = None,
    higher_is_better: bool = False,
    name: str = "gains",
) -> ResultTable:
    """Per-system percent gain over `baseline_row`, one column per table plus
    their mean. Errors are lower-is-better; pass ``higher_is_better`` for ROUGE.

    Each table stands for one dataset and is labelled by its ``dataset`` meta
    entry (or its name). Systems missing from a table are skipped in the mean.
    """
    if not tables:
        raise DataError("no tables to aggregate")
    labels = []
    for t in tables:
        if baseline_row not in t:
            raise DataError(f"baseline {baseline_row!r} missing from table {t.name}")
        label = t.meta.get("dataset", t.name)
        while label in labels:
            label += "'"
        labels.append(label)
    col = column if column is not None else tables[0].columns[0]
    systems = []
    for t in tables:
        systems += [r for r in t.rows if r not in systems]

    out = ResultTable(name, [*labels, "mean"], meta={"baseline": baseline_row, "metric": col})
    for s in systems:
        gains = []
        for t, label in zip(tables, labels):
            if s in t:
                g = relative_gain(t.get(s, col), t.get(baseline_row, col), higher_is_better)
                out.set(s, label, g)
                gains.append(g)
        out.set(s, "mean", sum(gains) / len(gains))
    return out
