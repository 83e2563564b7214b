"""Self-contained HTML report (inline SVG, no external assets)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import InputIoError
from .svg import esc

SECTIONS = (
    ("engagement", "Engagement", "dwell_bar"),
    ("performance", "Performance", "grade_box"),
    ("alignment", "Alignment", "bipartite"),
    ("cognitive-load", "Cognitive Load", "bloom_stack"),
)

_STYLE = """body{font-family:Helvetica,Arial,sans-serif;margin:2em auto;max-width:1240px;color:#222}
h1{font-size:1.6em}h2{border-bottom:1px solid #ccc;padding-bottom:.2em;margin-top:1.6em}
table.summary td,table.summary th{padding:.2em .8em;text-align:left}
.notice{color:#777;font-style:italic}svg{max-width:100%;height:auto}
ul.ids{font-family:monospace;font-size:.85em}"""


@dataclass
class ReportBundle:
    tables: dict[str, object] = field(default_factory=dict)
    charts: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _inline(svg: str) -> str:
    lines = svg.splitlines()
    if lines and lines[0].startswith("<?xml"):
        lines = lines[1:]
    return "\n".join(lines)


def _summary_rows(summary: dict) -> str:
    labels = [
        ("Cohort size (learners with events)", "cohort_size"),
        ("Correlation method", "method"),
        ("r (engagement vs final grade)", "r"),
        ("p (two-tailed)", "p"),
        ("n (joined learners)", "n"),
        ("Untagged leaf activities", "untagged_leaves"),
        ("LOs without activities", "los_without_activities"),
        ("LOs without an assessment", "los_without_assessment"),
    ]
    out = []
    for label, key in labels:
        value = summary.get(key)
        shown = "n/a" if value is None else (f"{value:.6f}" if isinstance(value, float) else str(value))
        out.append(f"<tr><th>{esc(label)}</th><td>{esc(shown)}</td></tr>")
    return "\n".join(out)


def _id_list(title: str, items: list) -> str:
    if not items:
        return f"<h3>{esc(title)}</h3>\n<p class=\"notice\">none</p>"
    body = "\n".join(f"<li>{esc(i)}</li>" for i in items)
    return f"<h3>{esc(title)} ({len(items)})</h3>\n<ul class=\"ids\">\n{body}\n</ul>"


def render_html(bundle: ReportBundle) -> str:
    summary = bundle.summary
    coverage = bundle.tables.get("coverage", {}) or {}
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        "<title>Learning-objective analytics report</title>",
        f"<style>{_STYLE}</style>",
        "</head>",
        "<body>",
        "<h1>Learning-objective analytics report</h1>",
        '<section id="summary">',
        "<h2>Summary</h2>",
        f'<table class="summary">\n{_summary_rows(summary)}\n</table>',
    ]
    for note in summary.get("notes", []):
        parts.append(f'<p class="notice">{esc(note)}</p>')
    parts.append("</section>")
    for anchor, heading, key in SECTIONS:
        parts.append(f'<section id="{anchor}">')
        parts.append(f"<h2>{esc(heading)}</h2>")
        svg = bundle.charts.get(key)
        if not svg or ">No data</text>" in svg:
            parts.append('<p class="notice">no data</p>')
        if svg:
            parts.append(f'<figure class="chart">\n{_inline(svg)}\n</figure>')
        parts.append("</section>")
    parts.append('<section id="coverage">')
    parts.append("<h2>Coverage diagnostics</h2>")
    parts.append(_id_list("Untagged leaf activities", coverage.get("untagged_leaves", [])))
    parts.append(_id_list("Learning objectives without tagged activities",
                          coverage.get("los_without_activities", [])))
    parts.append(_id_list("Learning objectives without an assessment measure",
                          coverage.get("los_without_assessment", [])))
    parts.append("</section>")
    parts.append("</body>")
    parts.append("</html>")
    return "\n".join(parts) + "\n"


def build_html(bundle: ReportBundle, out_dir: str | Path) -> Path:
    path = Path(out_dir) / "index.html"
    try:
        path.write_bytes(render_html(bundle).encode("utf-8"))
    except OSError as exc:
        raise InputIoError(path, exc.strerror or str(exc)) from None
    return path
