import math
import os

import pytest

from beltrami.report import ReportTable, line_plot_svg, write_atomic


def sample_table():
    t = ReportTable("demo", ["n", "value"])
    t.add([1, 0.1])
    t.add([2, 1 / 3], True)
    t.add([3, math.inf], False)
    t.checks["bounded"] = True
    t.footer["dhat"] = 0.5
    t.footer["family"] = "gp"
    return t


def test_csv_layout():
    text = sample_table().to_csv()
    lines = text.splitlines()
    assert lines[0] == "n,value,pass"
    assert lines[1] == "1,0.10000000000000001,"
    assert lines[2].endswith(",1") and lines[3] == "3,inf,0"
    assert "# check bounded=PASS" in lines
    assert "# dhat=0.5" in lines and "# family=gp" in lines


def test_csv_round_trips_floats():
    t = ReportTable("x", ["v"])
    vals = [1 / 7, 1e-300, 2.0 ** 0.5]
    for v in vals:
        t.add([v])
    parsed = [float(x) for x in t.to_csv().splitlines()[1:]]
    assert parsed == vals


def test_no_pass_column_without_flags():
    t = ReportTable("x", ["a"])
    t.add([1.0])
    assert t.to_csv().splitlines()[0] == "a"


def test_failures_and_passed():
    t = sample_table()
    assert t.failing_rows() == [2]
    assert not t.passed
    t.checks["growth"] = False
    assert t.failing_checks() == ["growth"]


def test_row_width_checked():
    with pytest.raises(ValueError):
        ReportTable("x", ["a", "b"]).add([1.0])


def test_csv_deterministic():
    assert sample_table().to_csv() == sample_table().to_csv()


def test_svg_structure():
    svg = line_plot_svg("t < 1", [1, 10, 100], {"a": [1, 0.1, 0.01], "b": [0, 1, 2]})
    assert svg.startswith("<svg") and 'viewBox="0 0 800 600"' in svg
    assert "t &lt; 1" in svg
    assert svg.count("<polyline") == 2
    assert svg.rstrip().endswith("</svg>")


def test_svg_from_table():
    t = ReportTable("curve", ["n", "norm"])
    for n in range(1, 6):
        t.add([n, n ** -1.5])
    assert "<polyline" in t.to_svg("n", ["norm"])


def test_write_atomic(tmp_path):
    path = tmp_path / "out.csv"
    write_atomic(path, "a\n")
    write_atomic(path, "b\n")
    assert path.read_text() == "b\n"
    assert oct(os.stat(path).st_mode & 0o777) == "0o644"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["out.csv"]
    write_atomic(tmp_path / "raw.bin", b"\x00\x01")
    assert (tmp_path / "raw.bin").read_bytes() == b"\x00\x01"
