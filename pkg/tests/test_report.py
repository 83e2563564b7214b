from __future__ import annotations

import json
import os
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest
from scipy import stats as sps

from lo_analytics.cli import main
from lo_analytics.errors import InputIoError
from lo_analytics.report import CHART_FILES, read_tables, write_report
from lo_analytics.report.fmt import fmt6
from lo_analytics.report.svg import render_bipartite, render_bloom_stack, render_dwell_bar, truncate

from tiny_inputs import write_tiny_inputs

GOLDEN = Path(__file__).parent / "golden"
SVG_NS = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def tiny_out(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny")
    config = write_tiny_inputs(root / "inputs")
    out = root / "out"
    assert main(["all", "--config", str(config), "--out", str(out)]) == 0
    return out


def test_fmt6_half_even_and_no_negative_zero():
    # exact binary ties go to the even neighbour
    assert fmt6(1 / 128) == "0.007812"
    assert fmt6(3 / 128) == "0.023438"
    # 2.5e-6 is stored slightly above the tie
    assert fmt6(2.5e-6) == "0.000003"
    assert fmt6(1 / 3) == "0.333333"
    assert fmt6(-1e-9) == "0.000000"
    assert fmt6(float("nan")) == ""


def test_tables_content(tiny_out):
    tables = read_tables(tiny_out)
    dwell = {r["lo_code"]: r for r in tables.lo_dwell}
    # LO1.1 sits on b1 and b2: ana 120 + 180, ben 60, cy 350, dee 100 (its 900 s gap is a break)
    assert dwell["LO1.1"]["total_s"] == "810.000000"
    assert dwell["LO1.1"]["engaged_n"] == "4"
    assert dwell["LO2.2"]["engaged_n"] == "0"
    assert tables.coverage["los_without_activities"] == ["LO2.2"]
    assert tables.coverage["untagged_leaves"] == ["ch2.s1.v1.b2"]
    bloom = [r for r in tables.bloom if r["week"] == "2"]
    assert [r["count"] for r in bloom] == ["0", "1", "0", "0", "0", "1"]
    assert tables.summary["n"] == 4
    # learner totals by hand: ana 500 s, ben 85 s, cy 410 s, dee 190 s
    r, p = sps.pearsonr([500, 85, 410, 190], [0.82, 0.35, 0.71, 0.12])
    assert float(tables.correlation["r_full"]) == pytest.approx(r, abs=1e-12)
    assert float(tables.correlation["p_full"]) == pytest.approx(p, rel=1e-9)


def _svg(path):
    return ET.parse(path).getroot()


def test_charts_are_valid_svg_and_echo_table_values(tiny_out):
    tables = read_tables(tiny_out)
    charts = {key: _svg(tiny_out / "charts" / name) for key, name in CHART_FILES.items()}
    for root in charts.values():
        assert root.tag == SVG_NS + "svg"
    bars = charts["dwell_bar"].findall(f".//{SVG_NS}rect[@class='bar']")
    assert [b.get("data-value") for b in bars] == [r["mean_min"] for r in tables.lo_dwell]
    widths = [float(b.get("width")) for b in bars]
    values = [float(r["mean_min"]) for r in tables.lo_dwell]
    top = max(range(len(values)), key=values.__getitem__)
    for w, v in zip(widths, values):
        assert w == pytest.approx(widths[top] * v / values[top], abs=0.01)
    edges = charts["bipartite"].findall(f".//{SVG_NS}line[@class='edge']")
    assert sum(int(e.get("data-weight")) for e in edges) == sum(int(r["weight"]) for r in tables.edges)
    stacks = charts["bloom_stack"].findall(f".//{SVG_NS}rect[@class='stack']")
    assert {(s.get("data-week"), s.get("data-level")) for s in stacks} == {
        (r["week"], r["level"]) for r in tables.bloom if r["count"] != "0"}
    boxes = charts["grade_box"].findall(f".//{SVG_NS}g[@class='boxplot']")
    assert len(boxes) == len(tables.grade_box)


def test_labels_are_escaped_and_truncated():
    rows = [{"lo_code": "LO<1>&" + "x" * 30, "lo_group": "LO<1>", "mean_min": "1.000000"}]
    svg = render_dwell_bar(rows)
    ET.fromstring(svg.split("\n", 1)[1])
    assert "&lt;" in svg and "<title>LO&lt;1&gt;&amp;" in svg
    assert truncate("abcdef", 4) == "abc…"


def test_empty_charts_say_no_data():
    assert "No data" in render_dwell_bar([])
    assert "No data" in render_bloom_stack([])
    assert "No data" in render_bipartite([], [], [])


def test_html_is_self_contained(tiny_out):
    html = (tiny_out / "index.html").read_text(encoding="utf-8")
    for heading in ("Summary", "Engagement", "Performance", "Alignment", "Cognitive Load",
                    "Coverage diagnostics"):
        assert f"<h2>{heading}</h2>" in html
    assert html.count("<svg ") == 4
    assert "<?xml" not in html
    assert "src=" not in html and "<link" not in html and "<script" not in html


def test_manifest_lists_every_output(tiny_out):
    manifest = json.loads((tiny_out / "manifest.json").read_text(encoding="utf-8"))
    paths = [m["path"] for m in manifest]
    assert paths == sorted(paths)
    assert "index.html" in paths and "config_used.toml" in paths
    assert all(f"charts/{name}" in paths for name in CHART_FILES.values())


def test_report_rerun_is_byte_identical(tiny_out):
    before = {p: p.read_bytes() for p in tiny_out.rglob("*") if p.is_file()}
    write_report(tiny_out)
    after = {p: p.read_bytes() for p in tiny_out.rglob("*") if p.is_file()}
    assert before == after


def test_report_needs_tables(tmp_path):
    with pytest.raises(InputIoError):
        write_report(tmp_path)


def test_golden_outputs(tiny_out):
    """Byte comparison against checked-in outputs. Set LO_UPDATE_GOLDEN=1 to refresh."""
    produced = sorted(p.relative_to(tiny_out).as_posix() for p in tiny_out.rglob("*") if p.is_file())
    if os.environ.get("LO_UPDATE_GOLDEN"):
        for rel in produced:
            target = GOLDEN / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes((tiny_out / rel).read_bytes())
    expected = sorted(p.relative_to(GOLDEN).as_posix() for p in GOLDEN.rglob("*") if p.is_file())
    assert produced == expected
    for rel in produced:
        assert (tiny_out / rel).read_bytes() == (GOLDEN / rel).read_bytes(), rel
