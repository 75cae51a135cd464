"""Report rows and their delimited/JSON serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

CSV_HEADER = (
    "dataset,recommender,explainer,format,level,K,scope,metric,"
    "mean,std,n,failures,mean_wall_time_s"
)

POSITIONAL_HEADER = (
    "dataset,recommender,explainer,format,level,K,scope,metric,position,mean,std,n"
)


@dataclass(frozen=True)
class ReportRow:
    dataset: str
    recommender: str
    explainer: str
    format: str
    level: str
    k: int
    scope: str
    metric: str
    mean: float
    std: float
    n: int
    failures: int
    mean_wall_time_s: float


@dataclass(frozen=True)
class PositionalRow:
    dataset: str
    recommender: str
    explainer: str
    format: str
    level: str
    k: int
    scope: str
    metric: str
    position: int
    mean: float
    std: float
    n: int


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)

    def extend(self, rows) -> None:
        self.rows.extend(rows)


def _fmt(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return f"{value:.6f}"


def _row_csv(row: ReportRow) -> str:
    return ",".join(
        (
            row.dataset,
            row.recommender,
            row.explainer,
            row.format,
            row.level,
            str(row.k),
            row.scope,
            row.metric,
            _fmt(row.mean),
            _fmt(row.std),
            str(row.n),
            str(row.failures),
            _fmt(row.mean_wall_time_s),
        )
    )


def emit_report(report: EvalReport, path: str, fmt: str = "csv") -> None:
    """Write the report; CSV uses the fixed header, JSON mirrors the rows."""
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for row in report.rows:
                fh.write(_row_csv(row) + "\n")
        return
    if fmt == "json":
        payload = []
        for row in report.rows:
            record = asdict(row)
            for key in ("mean", "std", "mean_wall_time_s"):
                value = record[key]
                record[key] = None if math.isnan(value) else round(value, 6)
            payload.append(record)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        return
    raise ValueError(f"unknown report format {fmt!r}")


def emit_positional(rows, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(POSITIONAL_HEADER + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    (
                        row.dataset,
                        row.recommender,
                        row.explainer,
                        row.format,
                        row.level,
                        str(row.k),
                        row.scope,
                        row.metric,
                        str(row.position),
                        _fmt(row.mean),
                        _fmt(row.std),
                        str(row.n),
                    )
                )
                + "\n"
            )


def _parse_float(token: str) -> float:
    return float("nan") if token == "nan" else float(token)


def load_report_csv(path: str) -> EvalReport:
    """Read back a CSV written by :func:`emit_report`."""
    report = EvalReport()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if ",".join(header) != CSV_HEADER:
            raise ValueError(f"unexpected report header in {path}")
        for rec in reader:
            report.rows.append(
                ReportRow(
                    dataset=rec[0],
                    recommender=rec[1],
                    explainer=rec[2],
                    format=rec[3],
                    level=rec[4],
                    k=int(rec[5]),
                    scope=rec[6],
                    metric=rec[7],
                    mean=_parse_float(rec[8]),
                    std=_parse_float(rec[9]),
                    n=int(rec[10]),
                    failures=int(rec[11]),
                    mean_wall_time_s=_parse_float(rec[12]),
                )
            )
    return report


def load_positional_csv(path: str) -> list:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if ",".join(header) != POSITIONAL_HEADER:
            raise ValueError(f"unexpected positional header in {path}")
        for rec in reader:
            rows.append(
                PositionalRow(
                    dataset=rec[0],
                    recommender=rec[1],
                    explainer=rec[2],
                    format=rec[3],
                    level=rec[4],
                    k=int(rec[5]),
                    scope=rec[6],
                    metric=rec[7],
                    position=int(rec[8]),
                    mean=_parse_float(rec[9]),
                    std=_parse_float(rec[10]),
                    n=int(rec[11]),
                )
            )
    return rows
