"""Tables, charts and the HTML report."""

from __future__ import annotations

from pathlib import Path

from ..analytics import SEGMENTS
from ..errors import InputIoError
from .html import ReportBundle, build_html, render_html
from .svg import render_bipartite, render_bloom_stack, render_dwell_bar, render_grade_box
from .tables import (CONFIG_USED, TABLE_FILES, TableSet, emit_tables, read_tables,
                     write_manifest)

CHART_DIR = "charts"
CHART_FILES = {
    "dwell_bar": "fig1_dwell_by_lo.svg",
    "grade_box": "fig2_grades_by_lo.svg",
    "bipartite": "fig3_modules_to_los.svg",
    "bloom_stack": "fig4_bloom_by_week.svg",
}


def build_bundle(tables: TableSet, metric: str = "mean_min") -> ReportBundle:
    los = [(r["lo_code"], r["lo_group"]) for r in tables.lo_dwell]
    segments = [s for s in SEGMENTS if any(r["segment"] == s for r in tables.grade_box)]
    charts = {
        "dwell_bar": render_dwell_bar(tables.lo_dwell, metric),
        "grade_box": render_grade_box(tables.grade_box, los, segments or [SEGMENTS[0]]),
        "bipartite": render_bipartite(tables.edges, tables.groups, los),
        "bloom_stack": render_bloom_stack(tables.bloom),
    }
    return ReportBundle(
        tables={"lo_dwell": tables.lo_dwell, "grade_box": tables.grade_box, "bloom": tables.bloom,
                "bipartite": tables.edges, "groups": tables.groups,
                "correlation": tables.correlation, "coverage": tables.coverage},
        charts=charts,
        summary=tables.summary,
    )


def write_report(out_dir: str | Path, metric: str = "mean_min") -> Path:
    """Render charts + ``index.html`` from the tables in ``out_dir`` and refresh the manifest."""
    out = Path(out_dir)
    bundle = build_bundle(read_tables(out), metric)
    chart_dir = out / CHART_DIR
    try:
        chart_dir.mkdir(parents=True, exist_ok=True)
        for key, name in CHART_FILES.items():
            (chart_dir / name).write_bytes(bundle.charts[key].encode("utf-8"))
    except OSError as exc:
        raise InputIoError(chart_dir, exc.strerror or str(exc)) from None
    index = build_html(bundle, out)
    names = list(TABLE_FILES) + [CONFIG_USED, index.name]
    names += [f"{CHART_DIR}/{name}" for name in CHART_FILES.values()]
    write_manifest(out, names)
    return index


__all__ = [
    "CHART_FILES", "ReportBundle", "TableSet", "build_bundle", "build_html", "emit_tables",
    "read_tables", "render_bipartite", "render_bloom_stack", "render_dwell_bar",
    "render_grade_box", "render_html", "write_report",
]
