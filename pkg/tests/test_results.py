import csv
import json
import math
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, strategies as st

from bmlab.errors import InsufficientData, SlopeUnavailable
from bmlab.results import ResultTable, fit_slope, fmt, write_csv, write_summary, write_svg


@given(st.floats(-3, 3), st.floats(0.01, 100))
def test_fit_recovers_power_law(slope, const):
    fit = fit_slope([(k, const * k**slope) for k in (8, 16, 32, 64)])
    assert abs(fit.slope - slope) <= 1e-10
    assert abs(fit.constant / const - 1) <= 1e-9
    assert fit.stderr <= 1e-9


def test_fit_drops_non_positive_values():
    fit = fit_slope([(8, 1.0), (16, 0.0), (32, 0.25), (64, -1.0)])
    assert fit.n_used == 2 and fit.n_filtered == 2
    assert abs(fit.slope + 1.0) <= 1e-12
    assert math.isnan(fit.stderr)


def test_fit_needs_two_values():
    with pytest.raises(InsufficientData):
        fit_slope([(8, 1.0), (16, 0.0)])


def test_single_k_has_no_slope():
    table = ResultTable("theorem1")
    table.add(8, 0.1, "distance", 1.0)
    with pytest.raises(SlopeUnavailable):
        table.fit("distance")
    assert table.try_fit("distance") is None


def test_rows_are_sorted_by_key():
    table = ResultTable("s")
    for k in (64, 8, 32):
        table.add(k, 0.0, "b", k)
        table.add(k, 0.0, "a", -k)
    table.sort()
    assert [(r.k, r.quantity) for r in table.rows][:3] == [(8, "a"), (8, "b"), (32, "a")]
    assert table.values("b") == [(8, 8.0), (32, 32.0), (64, 64.0)]
    with pytest.raises(KeyError):
        table.value("b", 16)


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, 2.0**-1074, 1e300, -0.0):
        assert float(fmt(x)) == x
    assert fmt(7) == "7"


def test_files(tmp_path):
    table = ResultTable("demo")
    for k in (8, 16, 32):
        table.add(k, 0.1, "err", 1.0 / k, 1e-15, 2e-9)
    table.fit("err")
    table.check("slope", True, "ok")
    table.info["note"] = float("nan")
    write_csv([table], tmp_path / "r.csv")
    write_summary([table], tmp_path / "s.json")
    write_svg(table, tmp_path / "p.svg")

    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["scenario", "k", "t", "quantity", "value", "err_quadrature", "err_fd"]
    assert [float(r["value"]) for r in rows] == [1 / 8, 1 / 16, 1 / 32]

    summary = json.loads((tmp_path / "s.json").read_text())
    assert summary["demo"]["passed"] is True
    assert abs(summary["demo"]["fits"]["err"]["slope"] + 1) <= 1e-12
    assert summary["demo"]["info"]["note"] is None

    root = ET.parse(tmp_path / "p.svg").getroot()
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 1


def test_svg_with_no_plottable_data(tmp_path):
    table = ResultTable("empty")
    table.add(8, 0.0, "zero", 0.0)
    write_svg(table, tmp_path / "p.svg")
    ET.parse(tmp_path / "p.svg")
