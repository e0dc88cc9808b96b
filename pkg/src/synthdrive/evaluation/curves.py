"""Training loss curve summaries from a per-epoch CSV log."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from ..errors import FormatError

LOSS_COLUMNS = ("box_loss", "cls_loss", "dfl_loss")


@dataclass(frozen=True)
class SeriesSummary:
    start: float
    end: float
    min: float
    min_epoch: float
    max: float


@dataclass
class LossCurveReport:
    epochs: list
    series: dict  # column -> list of values
    summary: dict  # column -> SeriesSummary

    def to_dict(self) -> dict:
        return {"epochs": len(self.epochs), "series": {k: asdict(v) for k, v in self.summary.items()}}

    def plot_data(self) -> str:
        """Whitespace-separated columns, one row per epoch, ``#`` header."""
        lines = ["# epoch " + " ".join(self.series)]
        for i, epoch in enumerate(self.epochs):
            lines.append(" ".join([f"{epoch:g}"] + [f"{self.series[c][i]:.6f}" for c in self.series]))
        return "\n".join(lines) + "\n"


def loss_curve_report(csv_path, plot_path: Optional[str] = None) -> LossCurveReport:
    """Summarize ``epoch, box_loss, cls_loss, dfl_loss`` columns; extra columns are ignored."""
    with open(Path(csv_path), newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip() for f in (reader.fieldnames or [])]
        missing = [c for c in ("epoch", *LOSS_COLUMNS) if c not in fields]
        if missing:
            raise FormatError(f"{csv_path}: missing column(s) {', '.join(missing)}")
        rows = [{k.strip(): v for k, v in row.items() if k is not None} for row in reader]
    if not rows:
        raise FormatError(f"{csv_path}: no data rows")
    try:
        epochs = [float(r["epoch"]) for r in rows]
        series = {c: [float(r[c]) for r in rows] for c in LOSS_COLUMNS}
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{csv_path}: non-numeric value ({exc})") from exc
    summary = {}
    for c, values in series.items():
        k = min(range(len(values)), key=values.__getitem__)
        summary[c] = SeriesSummary(values[0], values[-1], values[k], epochs[k], max(values))
    report = LossCurveReport(epochs, series, summary)
    if plot_path is not None:
        Path(plot_path).write_text(report.plot_data(), encoding="utf-8")
    return report
