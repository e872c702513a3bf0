"""CSV ingestion and JSON/CSV report emission.

All delimited files use ',' separators, '.' decimals, UTF-8 and LF line
endings.  Intensity files carry two header rows (instance IDs, then class
labels) above the n sample rows; precomputed distance files use the same
two header rows above the square matrix.  JSON reports carry a schema
version and embed the fully resolved configuration.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import (
    ClassLabeling,
    CsvFormatError,
    DataMatrix,
    DistanceMatrix,
    LabelCheckError,
    TestConfig,
)
from .testing import ClassTestResult, ValidationResult
from .simulation import StudyReport

SCHEMA_VERSION = "1"


class ReportSchemaError(LabelCheckError):
    """A report JSON does not match the schema version this build writes."""


def _read_rows(path: str | Path) -> list[list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh))


def _parse_headers(rows: list[list[str]], path) -> tuple[list[str], list[str | None]]:
    if len(rows) < 2:
        raise CsvFormatError(f"{path}: expected two header rows (ids, labels)")
    ids = [c.strip() for c in rows[0]]
    labels: list[str | None] = [c.strip() or None for c in rows[1]]
    if len(labels) != len(ids):
        raise CsvFormatError(
            f"expected {len(ids)} label cells, found {len(labels)}", line=2
        )
    return ids, labels


def _parse_numeric_row(row: list[str], width: int, line: int) -> list[float]:
    if len(row) != width:
        raise CsvFormatError(f"expected {width} columns, found {len(row)}", line=line)
    out = []
    for col, cell in enumerate(row, start=1):
        try:
            out.append(float(cell))
        except ValueError:
            raise CsvFormatError(
                f"column {col}: non-numeric value {cell.strip()!r}", line=line
            ) from None
    return out


def read_intensity_csv(path: str | Path) -> tuple[DataMatrix, ClassLabeling]:
    """Read an intensity CSV: id header, label header, then one row per sample."""
    rows = _read_rows(path)
    ids, labels = _parse_headers(rows, path)
    data_rows = [
        _parse_numeric_row(row, len(ids), line)
        for line, row in enumerate(rows[2:], start=3)
        if row  # ignore trailing blank lines
    ]
    if len(data_rows) < 2:
        raise CsvFormatError(f"{path}: need at least 2 sample rows, found {len(data_rows)}")
    data = DataMatrix(values=np.array(data_rows, dtype=float), instance_ids=tuple(ids))
    labeling = ClassLabeling.from_labels(labels)
    return data, labeling


def read_distance_csv(path: str | Path) -> tuple[DistanceMatrix, ClassLabeling]:
    """Read a precomputed distance CSV with the same two header rows."""
    rows = _read_rows(path)
    ids, labels = _parse_headers(rows, path)
    matrix_rows = [
        _parse_numeric_row(row, len(ids), line)
        for line, row in enumerate(rows[2:], start=3)
        if row
    ]
    if len(matrix_rows) != len(ids):
        raise CsvFormatError(
            f"{path}: distance matrix must be square; "
            f"{len(ids)} columns but {len(matrix_rows)} data rows"
        )
    distances = DistanceMatrix(
        entries=np.array(matrix_rows, dtype=float), instance_ids=tuple(ids)
    )
    labeling = ClassLabeling.from_labels(labels)
    return distances, labeling


def _float(x):
    return None if x is None else float(x)


def class_result_dict(result: ClassTestResult) -> dict:
    return {
        "class_id": result.class_id,
        "n1": result.class_size,
        "t_star_hat": float(result.t_star_hat),
        "tau_hat": float(result.tau_hat),
        "alpha": float(result.alpha),
        "a_alpha": result.a_alpha,
        "lemma2_satisfied": bool(result.lemma2_satisfied),
        "status": result.status,
        "fixed_point_found": bool(result.fixed_point_found),
        "n_removed": result.r_count,
        "instances": [
            {"id": iid, "z": int(z), "rejected": bool(r)}
            for iid, z, r in zip(result.instance_ids, result.z, result.rejected)
        ],
    }


def validation_report_dict(
    validation: ValidationResult,
    cfg: TestConfig,
    dropped_instances: Sequence[str] = (),
    deterministic: bool = False,
) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "validation",
        "alpha0": cfg.alpha0,
        "metric": cfg.metric,
        "classes": [class_result_dict(r) for r in validation.results],
        "errors": dict(validation.errors),
        "dropped_instances": list(dropped_instances),
    }
    if not deterministic:
        report["generated_at"] = datetime.now(timezone.utc).isoformat()
    return report


def study_report_dict(report: StudyReport, deterministic: bool = False) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "kind": report.kind,
        "config": asdict(report.config),
        "aggregates": asdict(report.aggregates),
        "mean_retained": report.mean_retained,
        "n_completed": report.n_completed,
        "n_excluded": report.n_excluded,
        "errors": list(report.errors),
        "runs": [
            {
                "run": rec.run,
                "status": rec.status,
                "t_star_hat": rec.t_star_hat,
                "tau_hat": rec.tau_hat,
                "a_alpha": rec.a_alpha,
                "n_removed": rec.n_removed,
                "n_retained": rec.n_retained,
                "sensitivity": _float(rec.metrics.sensitivity),
                "specificity": _float(rec.metrics.specificity),
                "fdr": float(rec.metrics.fdr),
                "for_rate": float(rec.metrics.for_rate),
                "pct_delta": _float(rec.metrics.pct_delta),
            }
            for rec in report.runs
        ],
    }
    if not deterministic:
        out["generated_at"] = datetime.now(timezone.utc).isoformat()
    return out


def write_json(obj: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        report = json.load(fh)
    version = report.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ReportSchemaError(
            f"{path}: schema version {version!r} does not match expected {SCHEMA_VERSION!r}"
        )
    return report


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path: str | Path, fieldnames: Sequence[str], rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_cell(row.get(name)) for name in fieldnames])


RUN_METRICS_FIELDS = (
    "run",
    "status",
    "t_star_hat",
    "tau_hat",
    "a_alpha",
    "n_removed",
    "n_retained",
    "sensitivity",
    "specificity",
    "fdr",
    "for_rate",
    "pct_delta",
)


def write_run_metrics_csv(report: StudyReport, path: str | Path) -> None:
    """One row of metrics per completed replication."""
    rows = [
        {
            "run": rec.run,
            "status": rec.status,
            "t_star_hat": rec.t_star_hat,
            "tau_hat": rec.tau_hat,
            "a_alpha": rec.a_alpha,
            "n_removed": rec.n_removed,
            "n_retained": rec.n_retained,
            "sensitivity": rec.metrics.sensitivity,
            "specificity": rec.metrics.specificity,
            "fdr": rec.metrics.fdr,
            "for_rate": rec.metrics.for_rate,
            "pct_delta": rec.metrics.pct_delta,
        }
        for rec in report.runs
    ]
    write_csv(path, RUN_METRICS_FIELDS, rows)


def write_ecdf_csv(result: ClassTestResult, path: str | Path) -> None:
    """Dump both pooled ECDFs of a tested class for external plotting."""
    rows = []
    for series, cdf in (("within", result.estimates.g_bar_hat),
                        ("between", result.estimates.f_bar_hat)):
        levels = np.searchsorted(cdf.values, cdf.values, side="right") / cdf.size
        rows.extend(
            {"series": series, "value": float(v), "cdf": float(c)}
            for v, c in zip(cdf.values, levels)
        )
    write_csv(path, ("series", "value", "cdf"), rows)
