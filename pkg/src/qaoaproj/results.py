"""Result rows and their CSV / JSON serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

COLUMNS = ("experiment", "n", "p", "layer", "gamma", "beta", "magnitude_sq", "residuals", "wall_time")


def fmt_float(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


@dataclass
class ResultRow:
    experiment: str
    n: int | None = None
    p: int | None = None
    layer: int | None = None
    gamma: float | None = None
    beta: float | None = None
    magnitude_sq: float | None = None
    residuals: dict[str, float | int | bool | None] = field(default_factory=dict)
    wall_time: float | None = None

    def sort_key(self):
        # None sorts before numbers
        return (self.experiment,) + tuple(
            (v is not None, v if v is not None else 0) for v in (self.n, self.p, self.layer)
        )

    def csv_cells(self) -> list[str]:
        residuals = ";".join(f"{k}={fmt_float(v)}" for k, v in self.residuals.items())
        return [
            self.experiment,
            fmt_float(self.n),
            fmt_float(self.p),
            fmt_float(self.layer),
            fmt_float(self.gamma),
            fmt_float(self.beta),
            fmt_float(self.magnitude_sq),
            residuals,
            fmt_float(self.wall_time),
        ]

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v

        return {
            "experiment": self.experiment,
            "n": self.n,
            "p": self.p,
            "layer": self.layer,
            "gamma": clean(self.gamma),
            "beta": clean(self.beta),
            "magnitude_sq": clean(self.magnitude_sq),
            "residuals": {k: clean(v) for k, v in self.residuals.items()},
            "wall_time": self.wall_time,
        }


def parse_residuals(cell: str) -> dict[str, str]:
    if not cell:
        return {}
    return dict(item.split("=", 1) for item in cell.split(";"))


def render_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in sorted(rows, key=ResultRow.sort_key):
        writer.writerow(row.csv_cells())
    return buf.getvalue()


def render_json(rows: Iterable[ResultRow]) -> str:
    payload = {
        "columns": list(COLUMNS),
        "rows": [r.to_dict() for r in sorted(rows, key=ResultRow.sort_key)],
    }
    # repr of a float round-trips exactly, i.e. at least 17 significant digits of information
    return json.dumps(payload, indent=1, allow_nan=False) + "\n"


def write_rows(rows: list[ResultRow], path: str | Path | None, fmt: str = "csv") -> str:
    text = render_csv(rows) if fmt == "csv" else render_json(rows)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    return text
