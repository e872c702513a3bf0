"""Tests for CSV ingestion and report serialization."""

import json

import pytest

from labelcheck.core import CsvFormatError, TestConfig as Config
from labelcheck.io import (
    ReportSchemaError,
    load_report,
    read_distance_csv,
    read_intensity_csv,
    study_report_dict,
    validation_report_dict,
    write_ecdf_csv,
    write_json,
    write_run_metrics_csv,
)
from labelcheck.simulation import StudyConfig, run_study
from labelcheck.testing import validate_all
from helpers import outlier_matrix


INTENSITY_CSV = """a,b,c,d,e
X,X,X,Y,Y
1.0,2.0,1.5,9.0,8.5
1.2,2.2,1.4,9.5,8.0
0.8,1.9,1.6,9.2,8.8
"""


def test_read_intensity_round_trip(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text(INTENSITY_CSV, encoding="utf-8")
    data, labeling = read_intensity_csv(path)
    assert data.instance_ids == ("a", "b", "c", "d", "e")
    assert data.values.shape == (3, 5)
    assert data.values[0, 3] == 9.0
    assert labeling.class_sizes == {"X": 3, "Y": 2}


def test_blank_labels_become_unassigned(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b,c\nX,X,\n1,2,3\n4,5,6\n", encoding="utf-8")
    _, labeling = read_intensity_csv(path)
    assert labeling.class_sizes[labeling.mega_class_id] == 1


def test_row_length_mismatch_reports_line(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b\nX,X\n1,2\n3\n", encoding="utf-8")
    with pytest.raises(CsvFormatError, match="line 4"):
        read_intensity_csv(path)


def test_non_numeric_cell_reports_line_and_column(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b\nX,X\n1,2\n3,oops\n", encoding="utf-8")
    with pytest.raises(CsvFormatError, match="line 4.*column 2"):
        read_intensity_csv(path)


def test_too_few_sample_rows(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b\nX,X\n1,2\n", encoding="utf-8")
    with pytest.raises(CsvFormatError, match="at least 2 sample rows"):
        read_intensity_csv(path)


def test_read_distance_csv(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text(
        "a,b,c\nX,X,\n0.0,0.5,0.9\n0.5,0.0,0.8\n0.9,0.8,0.0\n", encoding="utf-8"
    )
    d, labeling = read_distance_csv(path)
    assert d.entries[0, 1] == 0.5
    assert labeling.labels[:2] == ("X", "X")


def test_distance_csv_must_be_square(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b,c\nX,X,\n0,0.5,0.9\n0.5,0,0.8\n", encoding="utf-8")
    with pytest.raises(CsvFormatError, match="square"):
        read_distance_csv(path)


def test_distance_csv_asymmetry_rejected(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b\nX,X\n0.0,0.5\n0.4,0.0\n", encoding="utf-8")
    with pytest.raises(ValueError, match="asymmetric"):
        read_distance_csv(path)


def test_validation_report_schema(tmp_path):
    d, labeling, _ = outlier_matrix()
    cfg = Config()
    result = validate_all(d, labeling, cfg)
    report = validation_report_dict(result, cfg, deterministic=True)
    assert report["schema_version"] == "1"
    assert "generated_at" not in report
    entry = report["classes"][0]
    assert set(entry) >= {
        "class_id", "n1", "t_star_hat", "tau_hat", "alpha", "a_alpha",
        "lemma2_satisfied", "instances",
    }
    assert entry["instances"][0].keys() == {"id", "z", "rejected"}
    path = tmp_path / "report.json"
    write_json(report, path)
    assert json.loads(path.read_text()) == report


def test_timestamp_present_unless_deterministic():
    d, labeling, _ = outlier_matrix()
    cfg = Config()
    result = validate_all(d, labeling, cfg)
    assert "generated_at" in validation_report_dict(result, cfg)


def test_study_report_round_trip(tmp_path):
    cfg = StudyConfig(n=20, n1=8, n2=15, rho=(0.5, 0.2, 0.2), p=0.2, n_runs=2, seed=1)
    report = run_study(cfg)
    payload = study_report_dict(report, deterministic=True)
    path = tmp_path / "study.json"
    write_json(payload, path)
    loaded = load_report(path)
    assert loaded["kind"] == "study"
    assert loaded["config"]["n_runs"] == 2
    assert loaded["config"]["rho"] == [0.5, 0.2, 0.2]
    assert len(loaded["runs"]) == 2
    assert loaded["aggregates"]["fdr"]["count"] == 2


def test_schema_version_mismatch(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"schema_version": "0", "kind": "study"}', encoding="utf-8")
    with pytest.raises(ReportSchemaError, match="schema version"):
        load_report(path)


def test_run_metrics_csv_layout(tmp_path):
    cfg = StudyConfig(n=20, n1=8, n2=15, rho=(0.5, 0.2, 0.2), p=0.0, n_runs=2, seed=1)
    report = run_study(cfg)
    path = tmp_path / "metrics.csv"
    write_run_metrics_csv(report, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("run,status,t_star_hat,tau_hat,a_alpha")
    assert len(lines) == 3
    # p = 0: sensitivity and pct_delta are undefined and left empty
    first = lines[1].split(",")
    header = lines[0].split(",")
    assert first[header.index("sensitivity")] == ""
    assert first[header.index("pct_delta")] == ""


def test_ecdf_dump(tmp_path):
    d, labeling, _ = outlier_matrix()
    result = validate_all(d, labeling, Config()).results[0]
    path = tmp_path / "ecdf.csv"
    write_ecdf_csv(result, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "series,value,cdf"
    series = {line.split(",")[0] for line in lines[1:]}
    assert series == {"within", "between"}
    last_within = [l for l in lines[1:] if l.startswith("within")][-1]
    assert last_within.endswith(",1.0")
