import csv
import math

import pytest

from slicealloc.harness import SweepRecord
from slicealloc.report import CSV_COLUMNS, FIGURES, csv_row, emit_all, emit_csv, emit_svg

RECORDS = [
    SweepRecord("DRA", 1, 0, 1, 1, 250.5, 1e4, 249.6, 12.0),
    SweepRecord("JRA", 2, 0, 2, 2, 300.0, 2e4, 298.2, 20.0),
    SweepRecord("JRA", 1, 0, 1, 1, 200.0, 1e4, 199.1, 10.0),
    SweepRecord("DRA", 2, 0, 2, 0, math.nan, math.nan, math.nan, 15.0, True, False),
]


def test_csv_rows_are_sorted(tmp_path):
    path = emit_csv(RECORDS, tmp_path / "out" / "sweep.csv")
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [(r[0], r[1]) for r in rows[1:]] == [
        ("JRA", "1"),
        ("JRA", "2"),
        ("DRA", "1"),
        ("DRA", "2"),
    ]


def test_csv_row_format():
    row = dict(zip(CSV_COLUMNS, csv_row(RECORDS[3])))
    assert row["total_cost"] == "nan"
    assert row["acceptance_ratio"] == "0"
    assert row["rejected"] == "2"
    assert row["collapse"] == "1"
    assert row["time_limited"] == "0"
    assert row["wall_ms"] == "15.000"
    assert csv_row(RECORDS[0])[3] == "250.5"


def test_csv_is_byte_identical(tmp_path):
    a = emit_csv(RECORDS, tmp_path / "a.csv").read_bytes()
    b = emit_csv(list(reversed(RECORDS)), tmp_path / "b.csv").read_bytes()
    assert a == b


def test_empty_records(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "sweep.csv")
    with pytest.raises(ValueError):
        emit_svg([], "cost", tmp_path / "cost.svg")


def test_svg(tmp_path):
    path = emit_svg(RECORDS, "acceptance", tmp_path / "acceptance.svg")
    text = path.read_text()
    assert "<svg" in text
    again = emit_svg(RECORDS, "acceptance", tmp_path / "again.svg")
    assert again.read_bytes() == path.read_bytes()


def test_unknown_figure(tmp_path):
    with pytest.raises(ValueError, match="unknown figure"):
        emit_svg(RECORDS, "latency", tmp_path / "latency.svg")


def test_emit_all(tmp_path):
    written = emit_all(RECORDS, tmp_path)
    assert sorted(p.name for p in written) == sorted(
        ["sweep.csv", *(f"{name}.svg" for name in FIGURES)]
    )
    assert all(p.stat().st_size > 0 for p in written)
