"""Subsection and final grades; per-learner, per-objective point aggregation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .course_model import CourseTree, Kind
from .tags import LearningObjective, TagMap, lo_sort_key

DEFAULT_PASS_THRESHOLD = 0.60
CERT_EARNED = "earned"
CERT_NOT_PASSING = "notpassing"


@dataclass(frozen=True)
class SubsectionGrade:
    learner_id: str
    sequential_id: str
    earned: float
    possible: float


@dataclass(frozen=True)
class LoGrade:
    learner_id: str
    lo_code: str
    earned: float
    possible: float

    @property
    def pct(self) -> float:
        return self.earned / self.possible


@dataclass(frozen=True)
class FinalGrade:
    learner_id: str
    grade: float
    passed: bool


@dataclass(frozen=True)
class RowError:
    line_no: int
    message: str


@dataclass
class GradeReport:
    errors: list[RowError] = field(default_factory=list)
    unknown_sequentials: list[RowError] = field(default_factory=list)
    zero_possible_dropped: int = 0
    untagged_points: dict[str, dict[str, float]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "row_errors": [{"line": e.line_no, "message": e.message} for e in self.errors],
            "unknown_sequentials": [{"line": e.line_no, "message": e.message}
                                    for e in self.unknown_sequentials],
            "zero_possible_dropped": self.zero_possible_dropped,
            "untagged_points": self.untagged_points,
        }


def _csv_rows(text: str, header_first: str):
    for line_no, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip():
            continue
        row = [cell.strip() for cell in row]
        if line_no == 1 and row[0].lower() == header_first:
            continue
        yield line_no, row


def _points(text: str) -> float:
    value = float(text)
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"points must be finite and >= 0, got {text!r}")
    return value


def load_subsection_grades(text: str, tree: CourseTree,
                           report: GradeReport | None = None) -> tuple[list[SubsectionGrade], GradeReport]:
    """Parse ``learner_id,sequential_id,earned,possible``; bad rows go to the report."""
    report = report or GradeReport()
    records: list[SubsectionGrade] = []
    for line_no, row in _csv_rows(text, "learner_id"):
        if len(row) != 4:
            report.errors.append(RowError(line_no, "expected learner_id,sequential_id,earned,possible"))
            continue
        learner, seq, earned_text, possible_text = row
        if not learner:
            report.errors.append(RowError(line_no, "empty learner_id"))
            continue
        try:
            earned, possible = _points(earned_text), _points(possible_text)
        except ValueError as exc:
            report.errors.append(RowError(line_no, str(exc)))
            continue
        if earned > possible:
            report.errors.append(RowError(line_no, f"earned {earned} exceeds possible {possible}"))
            continue
        module = tree.modules.get(seq)
        if module is None or module.kind is not Kind.SEQUENTIAL:
            report.unknown_sequentials.append(RowError(line_no, f"unknown sequential {seq!r}"))
            continue
        records.append(SubsectionGrade(learner, seq, earned, possible))
    return records, report


def filter_zero_possible(records: Iterable[SubsectionGrade],
                         report: GradeReport | None = None) -> list[SubsectionGrade]:
    """Drop sequentials that carry no points; the drop count goes to ``report``."""
    records = list(records)
    kept = [r for r in records if r.possible > 0]
    if report is not None:
        report.zero_possible_dropped += len(records) - len(kept)
    return kept


def sequential_lo_codes(tree: CourseTree, tagmap: TagMap, sequential_id: str) -> tuple[str, ...]:
    """LOs a sequential's points count toward: its own tag, else every LO tagged below it."""
    own = tagmap.get(sequential_id)
    if own is not None:
        return own.lo_codes
    codes: set[str] = set()
    for module in tree.descendants(sequential_id):
        record = tagmap.get(module.id)
        if record is not None:
            codes.update(record.lo_codes)
    return tuple(sorted(codes, key=lo_sort_key))


def aggregate_by_lo(records: Iterable[SubsectionGrade], tagmap: TagMap,
                    registry: Mapping[str, LearningObjective], tree: CourseTree,
                    report: GradeReport | None = None) -> list[LoGrade]:
    """Credit each graded record in full to every LO of its sequential.

    Output is ordered by (learner_id, lo_code); pairs with no possible points are omitted.
    """
    lo_cache: dict[str, tuple[str, ...]] = {}
    parts: dict[tuple[str, str], tuple[list[float], list[float]]] = {}
    for r in records:
        codes = lo_cache.get(r.sequential_id)
        if codes is None:
            codes = tuple(c for c in sequential_lo_codes(tree, tagmap, r.sequential_id) if c in registry)
            lo_cache[r.sequential_id] = codes
        if not codes:
            if report is not None:
                bucket = report.untagged_points.setdefault(r.sequential_id, {"earned": 0.0, "possible": 0.0})
                bucket["earned"] += r.earned
                bucket["possible"] += r.possible
            continue
        for code in codes:
            earned, possible = parts.setdefault((r.learner_id, code), ([], []))
            earned.append(r.earned)
            possible.append(r.possible)
    out = []
    for (learner, code), (earned, possible) in parts.items():
        total_possible = math.fsum(possible)
        if total_possible > 0:
            out.append(LoGrade(learner, code, math.fsum(earned), total_possible))
    out.sort(key=lambda g: (g.learner_id, lo_sort_key(g.lo_code)))
    if report is not None:
        report.untagged_points = dict(sorted(report.untagged_points.items()))
    return out


def load_final_grades(text: str, pass_threshold: float = DEFAULT_PASS_THRESHOLD,
                      report: GradeReport | None = None) -> tuple[list[FinalGrade], GradeReport]:
    """Parse ``learner_id,grade,certificate``.

    A non-empty certificate column decides pass/fail; otherwise the grade is
    compared against ``pass_threshold``.
    """
    if not 0.0 <= pass_threshold <= 1.0:
        raise ValueError("pass_threshold must lie in [0, 1]")
    report = report or GradeReport()
    grades: dict[str, FinalGrade] = {}
    for line_no, row in _csv_rows(text, "learner_id"):
        if len(row) == 2:
            row = row + [""]
        if len(row) != 3 or not row[0]:
            report.errors.append(RowError(line_no, "expected learner_id,grade,certificate"))
            continue
        learner, grade_text, cert = row[0], row[1], row[2].lower()
        try:
            grade = float(grade_text)
        except ValueError:
            report.errors.append(RowError(line_no, f"grade {grade_text!r} is not a number"))
            continue
        if not 0.0 <= grade <= 1.0:
            report.errors.append(RowError(line_no, f"grade {grade} outside [0, 1]"))
            continue
        if cert not in ("", CERT_EARNED, CERT_NOT_PASSING):
            report.errors.append(RowError(line_no, f"unknown certificate status {row[2]!r}"))
            continue
        if learner in grades:
            report.errors.append(RowError(line_no, f"duplicate learner {learner!r}"))
            continue
        passed = cert == CERT_EARNED if cert else grade >= pass_threshold
        grades[learner] = FinalGrade(learner, grade, passed)
    return [grades[k] for k in sorted(grades)], report
