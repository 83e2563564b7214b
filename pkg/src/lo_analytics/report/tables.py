"""Result tables on disk: the only interface between ``analyze`` and ``report``."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..analytics import SEGMENTS, AnalysisResults
from ..errors import InputIoError
from ..tags import Bloom
from .fmt import fmt6, round6

LO_DWELL = "lo_dwell.csv"
LO_GRADES_BOX = "lo_grades_box.csv"
CORRELATION = "correlation.json"
BLOOM = "bloom.csv"
BIPARTITE = "bipartite.csv"
BIPARTITE_GROUPS = "bipartite_groups.csv"
COVERAGE = "coverage.json"
DIAGNOSTICS = "diagnostics.json"
SUMMARY = "summary.json"
MANIFEST = "manifest.json"
CONFIG_USED = "config_used.toml"

TABLE_FILES = (LO_DWELL, LO_GRADES_BOX, CORRELATION, BLOOM, BIPARTITE, BIPARTITE_GROUPS,
               COVERAGE, DIAGNOSTICS, SUMMARY)

LO_DWELL_COLUMNS = ["lo_code", "lo_group", "total_s", "mean_s", "median_s", "engaged_n",
                    "total_min", "mean_min", "median_min"]
BOX_COLUMNS = ["segment", "lo_code", "lo_group", "n", "min", "q1", "median", "q3", "max",
               "lower_whisker", "upper_whisker", "outliers"]
BLOOM_COLUMNS = ["week", "level", "level_name", "count", "pct"]
BIPARTITE_COLUMNS = ["group_id", "lo_code", "lo_group", "weight"]
GROUP_COLUMNS = ["group_id", "label", "week", "activities"]


def _csv_text(columns: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        path.write_bytes(text.encode("utf-8"))
    except OSError as exc:
        raise InputIoError(path, exc.strerror or str(exc)) from None


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir: Path, names: list[str]) -> list[dict]:
    entries = [{"path": name, "sha256": sha256_file(out_dir / name)}
               for name in sorted(set(names)) if (out_dir / name).is_file()]
    _write(out_dir / MANIFEST, _json_text(entries))
    return entries


def correlation_payload(results: AnalysisResults) -> dict:
    c = results.correlation
    join = results.join
    return {
        "method": c.method if c else None,
        "r": round6(c.r) if c else None,
        "p": round6(c.p) if c else None,
        "n": c.n if c else 0,
        # full precision for exact comparisons; r/p above are the 6-decimal report values
        "r_full": repr(c.r) if c else None,
        "p_full": repr(c.p) if c else None,
        "joined": join.joined if join else 0,
        "missing_grade": join.missing_grade if join else 0,
        "missing_dwell": join.missing_dwell if join else 0,
        "error": results.correlation_error,
    }


def emit_tables(results: AnalysisResults, out_dir: str | Path) -> list[dict]:
    """Write every result table plus ``manifest.json``; returns the manifest entries."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputIoError(out, exc.strerror or str(exc)) from None

    dwell_rows = [[d.lo_code, d.lo_group, fmt6(d.total_s), fmt6(d.mean_s), fmt6(d.median_s),
                   d.engaged_n, fmt6(d.total_s / 60), fmt6(d.mean_s / 60), fmt6(d.median_s / 60)]
                  for d in results.lo_dwell]
    _write(out / LO_DWELL, _csv_text(LO_DWELL_COLUMNS, dwell_rows))

    box_rows = []
    for segment in SEGMENTS:
        for code, b in results.grade_boxes.get(segment, {}).items():
            box_rows.append([segment, code, results.lo_groups.get(code, ""), b.n, fmt6(b.min),
                             fmt6(b.q1), fmt6(b.median), fmt6(b.q3), fmt6(b.max),
                             fmt6(b.lower_whisker), fmt6(b.upper_whisker),
                             ";".join(fmt6(v) for v in b.outliers)])
    _write(out / LO_GRADES_BOX, _csv_text(BOX_COLUMNS, box_rows))

    _write(out / CORRELATION, _json_text(correlation_payload(results)))

    bloom_rows = [[c.week, int(c.level), c.level.label, c.count, fmt6(c.pct)] for c in results.bloom]
    _write(out / BLOOM, _csv_text(BLOOM_COLUMNS, bloom_rows))

    edge_rows = [[e.group_id, e.lo_code, results.lo_groups.get(e.lo_code, ""), e.weight]
                 for e in results.edges]
    _write(out / BIPARTITE, _csv_text(BIPARTITE_COLUMNS, edge_rows))
    group_rows = [[g.group_id, g.label, g.week, g.activities] for g in results.groups]
    _write(out / BIPARTITE_GROUPS, _csv_text(GROUP_COLUMNS, group_rows))

    _write(out / COVERAGE, _json_text(results.coverage))
    _write(out / DIAGNOSTICS, _json_text(results.diagnostics))

    corr = correlation_payload(results)
    summary = {
        "r": corr["r"],
        "p": corr["p"],
        "n": corr["n"],
        "method": corr["method"],
        "cohort_size": results.cohort_size,
        "untagged_leaves": len(results.coverage.get("untagged_leaves", [])),
        "los_without_activities": len(results.coverage.get("los_without_activities", [])),
        "los_without_assessment": len(results.coverage.get("los_without_assessment", [])),
        "notes": list(results.notes),
    }
    _write(out / SUMMARY, _json_text(summary))
    return write_manifest(out, list(TABLE_FILES) + [CONFIG_USED])


@dataclass
class TableSet:
    """Tables as read back from disk. Numeric cells stay strings so charts can
    print exactly what the table holds."""

    lo_dwell: list[dict[str, str]] = field(default_factory=list)
    grade_box: list[dict[str, str]] = field(default_factory=list)
    bloom: list[dict[str, str]] = field(default_factory=list)
    edges: list[dict[str, str]] = field(default_factory=list)
    groups: list[dict[str, str]] = field(default_factory=list)
    correlation: dict = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _read_csv(path: Path) -> list[dict[str, str]]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def read_tables(out_dir: str | Path) -> TableSet:
    out = Path(out_dir)
    missing = [name for name in TABLE_FILES if not (out / name).is_file()]
    if missing:
        raise InputIoError(out, f"missing result tables: {', '.join(missing)}")
    return TableSet(
        lo_dwell=_read_csv(out / LO_DWELL),
        grade_box=_read_csv(out / LO_GRADES_BOX),
        bloom=_read_csv(out / BLOOM),
        edges=_read_csv(out / BIPARTITE),
        groups=_read_csv(out / BIPARTITE_GROUPS),
        correlation=json.loads((out / CORRELATION).read_text(encoding="utf-8")),
        coverage=json.loads((out / COVERAGE).read_text(encoding="utf-8")),
        diagnostics=json.loads((out / DIAGNOSTICS).read_text(encoding="utf-8")),
        summary=json.loads((out / SUMMARY).read_text(encoding="utf-8")),
    )


BLOOM_NAMES = [level.label for level in Bloom]
