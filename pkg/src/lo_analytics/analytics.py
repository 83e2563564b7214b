"""Figure-level statistics: engagement vs performance, per-LO dwell and grade
distributions, Bloom mix per week and the chapter-to-LO alignment graph."""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .course_model import CourseTree, Kind, SUPPLEMENTAL_WEEK, week_of
from .events import Attribution
from .grading import FinalGrade, LoGrade
from .stats import BoxStats, CorrelationResult, box_stats, correlate
from .tags import Bloom, LearningObjective, TagMap, lo_sort_key

SEGMENT_ALL = "all"
SEGMENT_PASSED = "passed"
SEGMENT_NOT_PASSED = "not_passed"
SEGMENTS = (SEGMENT_ALL, SEGMENT_PASSED, SEGMENT_NOT_PASSED)


@dataclass(frozen=True)
class JoinSummary:
    joined: int
    missing_grade: int
    missing_dwell: int


def engagement_performance(dwell_ms: Mapping[str, int], final_grades: Iterable[FinalGrade],
                           method: str = "pearson") -> tuple[CorrelationResult, JoinSummary]:
    """Correlate each learner's total dwell (seconds) with their final grade.

    Learners lacking either value are left out and counted in the summary.
    """
    grades = {g.learner_id: g.grade for g in final_grades}
    learners = sorted(set(dwell_ms) & set(grades))
    summary = JoinSummary(
        joined=len(learners),
        missing_grade=len(set(dwell_ms) - set(grades)),
        missing_dwell=len(set(grades) - set(dwell_ms)),
    )
    x = [dwell_ms[k] / 1000 for k in learners]
    y = [grades[k] for k in learners]
    return correlate(x, y, method), summary


@dataclass(frozen=True)
class LoDwell:
    lo_code: str
    lo_group: str
    total_s: float
    mean_s: float
    median_s: float
    engaged_n: int


def learner_lo_dwell_ms(attribution: Attribution, tagmap: TagMap,
                        tree: CourseTree) -> tuple[dict[tuple[str, str], int], dict[str, int]]:
    """Per (learner, LO) dwell in ms, plus dwell on modules without any effective tag."""
    per: dict[tuple[str, str], int] = {}
    untagged: dict[str, int] = {}
    codes_of: dict[str, tuple[str, ...]] = {}
    for (learner, module_id), ms in attribution.module_ms.items():
        codes = codes_of.get(module_id)
        if codes is None:
            record = tagmap.effective(tree, module_id) if module_id in tree else None
            codes = record.lo_codes if record else ()
            codes_of[module_id] = codes
        if not codes:
            untagged[module_id] = untagged.get(module_id, 0) + ms
        for code in codes:
            per[(learner, code)] = per.get((learner, code), 0) + ms
    return per, dict(sorted(untagged.items()))


def lo_dwell_summary(attribution: Attribution, tagmap: TagMap,
                     registry: Mapping[str, LearningObjective],
                     tree: CourseTree) -> tuple[list[LoDwell], dict[str, int]]:
    per, untagged = learner_lo_dwell_ms(attribution, tagmap, tree)
    by_lo: dict[str, list[int]] = {}
    for (_, code), ms in per.items():
        if ms > 0:
            by_lo.setdefault(code, []).append(ms)
    rows = []
    for code in sorted(registry, key=lo_sort_key):
        values = by_lo.get(code, [])
        total_ms = sum(values)
        rows.append(LoDwell(
            lo_code=code,
            lo_group=registry[code].group,
            total_s=total_ms / 1000,
            mean_s=total_ms / len(values) / 1000 if values else 0.0,
            median_s=statistics.median(values) / 1000 if values else 0.0,
            engaged_n=len(values),
        ))
    return rows, untagged


def lo_grade_box(lo_grades: Iterable[LoGrade], final_grades: Iterable[FinalGrade],
                 registry: Mapping[str, LearningObjective], segment: str = SEGMENT_ALL,
                 whisker_k: float = 1.5) -> tuple[dict[str, BoxStats], list[str]]:
    """Box summary of per-learner LO percentages for one pass/fail segment.

    Learners without a final grade only appear in the ``all`` segment.
    Returns the boxes keyed by LO code and notes for omitted LOs.
    """
    if segment not in SEGMENTS:
        raise ValueError(f"unknown segment {segment!r}")
    passed = {g.learner_id: g.passed for g in final_grades}
    values: dict[str, list[float]] = {}
    for g in lo_grades:
        if segment != SEGMENT_ALL:
            flag = passed.get(g.learner_id)
            if flag is None or flag != (segment == SEGMENT_PASSED):
                continue
        values.setdefault(g.lo_code, []).append(g.pct)
    boxes: dict[str, BoxStats] = {}
    notes: list[str] = []
    for code in sorted(registry, key=lo_sort_key):
        if code in values:
            boxes[code] = box_stats(values[code], whisker_k)
        else:
            notes.append(f"{code}: no graded data in segment {segment}")
    return boxes, notes


@dataclass(frozen=True)
class BloomCell:
    week: int
    level: Bloom
    count: int
    pct: float


def bloom_distribution(tagmap: TagMap, tree: CourseTree,
                       overrides: Mapping[str, int] | None = None) -> tuple[list[BloomCell], list[str]]:
    """Count tagged activities per (week, level); percentages are within-week.

    Every week that has a chapter gets six cells, even when nothing is tagged.
    """
    counts: dict[int, Counter] = {}
    for chapter in tree.of_kind(Kind.CHAPTER):
        counts.setdefault(week_of(tree, chapter.id, overrides), Counter())
    notes: list[str] = []
    for record in tagmap:
        if tree.chapter_of(record.module_id) is None:
            notes.append(f"{record.module_id}: tag on course root has no week")
            continue
        counts.setdefault(week_of(tree, record.module_id, overrides), Counter())[record.bloom] += 1
    cells = []
    for week in sorted(counts):
        total = sum(counts[week].values())
        if total == 0:
            label = "supplemental" if week == SUPPLEMENTAL_WEEK else f"week {week}"
            notes.append(f"{label}: no tagged activities")
        for level in Bloom:
            n = counts[week][level]
            cells.append(BloomCell(week, level, n, n / total if total else 0.0))
    return cells, notes


@dataclass(frozen=True)
class BipartiteEdge:
    group_id: str
    lo_code: str
    weight: int


@dataclass(frozen=True)
class BipartiteGroup:
    group_id: str
    label: str
    week: int
    activities: int


def bipartite_edges(tree: CourseTree, tagmap: TagMap,
                    overrides: Mapping[str, int] | None = None
                    ) -> tuple[list[BipartiteEdge], list[BipartiteGroup]]:
    """Chapter -> LO weights: number of tagged activities under the chapter carrying the LO."""
    weights: Counter = Counter()
    activities: Counter = Counter()
    for record in tagmap:
        chapter = tree.chapter_of(record.module_id)
        if chapter is None:
            continue
        activities[chapter.id] += 1
        for code in record.lo_codes:
            weights[(chapter.id, code)] += 1
    chapters = tree.of_kind(Kind.CHAPTER)
    order = {c.id: i for i, c in enumerate(chapters)}
    groups = [BipartiteGroup(c.id, c.display_name or c.id, week_of(tree, c.id, overrides),
                             activities[c.id]) for c in chapters]
    edges = [BipartiteEdge(g, code, w) for (g, code), w in weights.items() if w > 0]
    edges.sort(key=lambda e: (order[e.group_id], lo_sort_key(e.lo_code)))
    return edges, groups


@dataclass
class AnalysisResults:
    """Everything the report layer consumes."""

    lo_dwell: list[LoDwell] = field(default_factory=list)
    grade_boxes: dict[str, dict[str, BoxStats]] = field(default_factory=dict)
    correlation: CorrelationResult | None = None
    correlation_error: str | None = None
    join: JoinSummary | None = None
    bloom: list[BloomCell] = field(default_factory=list)
    edges: list[BipartiteEdge] = field(default_factory=list)
    groups: list[BipartiteGroup] = field(default_factory=list)
    lo_groups: dict[str, str] = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    cohort_size: int = 0
