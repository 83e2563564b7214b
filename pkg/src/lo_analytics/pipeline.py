"""End-to-end orchestration: load inputs, run the analysis, collect diagnostics."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from . import analytics
from .course_model import CourseTree, Kind, load_week_overrides, parse_course_tree, resolve_event_ref
from .errors import DegenerateInput, InputIoError
from .events import (DEFAULT_BREAK_S, TERMINAL_ZERO, expand_event_paths, ingest,
                     load_exclusions, partition_and_sort, read_lines, sessionize_partitions)
from .grading import (DEFAULT_PASS_THRESHOLD, FinalGrade, GradeReport, SubsectionGrade,
                      aggregate_by_lo, filter_zero_possible, load_final_grades,
                      load_subsection_grades)
from .tags import LoRegistry, TagMap, TagReport, coverage_report, load_lo_registry, load_tags

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    course: str | None = None
    events: str | None = None
    tags: str | None = None
    lo_registry: str | None = None
    grades: str | None = None
    final_grades: str | None = None
    week_overrides: str | None = None
    exclude_learners: str | None = None
    out: str = "out"
    break_seconds: float = DEFAULT_BREAK_S
    pass_threshold: float = DEFAULT_PASS_THRESHOLD
    terminal_dwell: str = TERMINAL_ZERO
    segments: tuple[str, ...] = analytics.SEGMENTS
    correlation: str = "pearson"
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if not self.break_seconds > 0:
            raise ValueError("break_seconds must be > 0")
        if not 0.0 <= self.pass_threshold <= 1.0:
            raise ValueError("pass_threshold must lie in [0, 1]")
        if self.terminal_dwell not in ("zero", "cap"):
            raise ValueError("terminal_dwell must be 'zero' or 'cap'")
        unknown = set(self.segments) - set(analytics.SEGMENTS)
        if unknown or not self.segments:
            raise ValueError(f"segments must be drawn from {', '.join(analytics.SEGMENTS)}")
        if self.correlation not in ("pearson", "spearman"):
            raise ValueError("correlation must be 'pearson' or 'spearman'")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


def _read(path: str | None, what: str) -> str:
    if not path:
        raise InputIoError(f"<{what}>", "path not configured")
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputIoError(path, exc.strerror or str(exc)) from None


@dataclass
class Inputs:
    tree: CourseTree
    registry: LoRegistry
    tagmap: TagMap
    tag_report: TagReport
    subsection: list[SubsectionGrade] = field(default_factory=list)
    finals: list[FinalGrade] = field(default_factory=list)
    grade_report: GradeReport = field(default_factory=GradeReport)
    exclusions: frozenset[str] = frozenset()
    notes: list[str] = field(default_factory=list)


def load_inputs(config: RunConfig) -> Inputs:
    """Parse every non-event input. Structural problems raise; row problems are reported."""
    tree = parse_course_tree(_read(config.course, "course"))
    if config.week_overrides:
        tree = tree.with_week_overrides(load_week_overrides(_read(config.week_overrides, "week overrides"), tree))
    registry = load_lo_registry(_read(config.lo_registry, "lo registry"))
    tagmap, tag_report = load_tags(_read(config.tags, "tags"), registry, tree)
    inputs = Inputs(tree, registry, tagmap, tag_report)
    if config.grades:
        records, _ = load_subsection_grades(_read(config.grades, "grades"), tree, inputs.grade_report)
        inputs.subsection = filter_zero_possible(records, inputs.grade_report)
    else:
        inputs.notes.append("no subsection grades configured; per-LO grade statistics skipped")
    if config.final_grades:
        inputs.finals, _ = load_final_grades(_read(config.final_grades, "final grades"),
                                             config.pass_threshold, inputs.grade_report)
    else:
        inputs.notes.append("no final grades configured; correlation and segments skipped")
    if config.exclude_learners:
        inputs.exclusions = load_exclusions(_read(config.exclude_learners, "exclusions"))
    return inputs


def graded_sequentials(inputs: Inputs) -> set[str] | None:
    if not inputs.subsection:
        return None
    return {r.sequential_id for r in inputs.subsection}


def coverage(inputs: Inputs):
    return coverage_report(inputs.tree, inputs.tagmap, inputs.registry, graded_sequentials(inputs))


def load_events(config: RunConfig, exclusions: frozenset[str]):
    if not config.events:
        raise InputIoError("<events>", "path not configured")
    paths = expand_event_paths(config.events)
    return ingest(read_lines(paths), exclusions)


def _lo_groups(inputs: Inputs) -> dict[str, str]:
    return {lo.code: lo.group for lo in inputs.registry.values()}


def analyze(config: RunConfig, inputs: Inputs | None = None) -> analytics.AnalysisResults:
    config.validate()
    inputs = inputs or load_inputs(config)
    tree = inputs.tree
    records, stats = load_events(config, inputs.exclusions)
    log.info("event=ingest lines=%d parsed=%d skipped=%d excluded=%d out_of_order=%d",
             stats.lines, stats.parsed, sum(stats.skipped.values()), stats.excluded, stats.out_of_order)
    partitions, stats.duplicates = partition_and_sort(records)
    del records
    resolve = lambda ref: resolve_event_ref(tree, ref)  # noqa: E731
    segments, attribution = sessionize_partitions(
        partitions, config.break_seconds, resolve=resolve,
        terminal_dwell=config.terminal_dwell, threads=config.threads)

    unmapped_refs: Counter = Counter()
    unmapped_events = 0
    for events in partitions.values():
        for e in events:
            if resolve(e.module_ref) is None:
                unmapped_events += 1
                unmapped_refs[e.module_ref or "<none>"] += 1
    segment_dwell_ms = sum(s.dwell_ms for segs in segments.values() for s in segs)
    log.info("event=sessionize learners=%d segments=%d dwell_ms=%d",
             len(segments), sum(len(s) for s in segments.values()), segment_dwell_ms)

    results = analytics.AnalysisResults()
    results.cohort_size = len(segments)
    results.lo_groups = _lo_groups(inputs)
    results.notes.extend(inputs.notes)
    if not segments:
        results.notes.append("event log contained no usable events")

    results.lo_dwell, untagged_dwell = analytics.lo_dwell_summary(attribution, inputs.tagmap,
                                                                  inputs.registry, tree)
    lo_grades = aggregate_by_lo(inputs.subsection, inputs.tagmap, inputs.registry, tree,
                                inputs.grade_report)
    for segment in config.segments:
        boxes, notes = analytics.lo_grade_box(lo_grades, inputs.finals, inputs.registry, segment)
        results.grade_boxes[segment] = boxes
        results.notes.extend(notes)

    learner_totals = attribution.learner_totals_ms()
    if inputs.finals:
        try:
            results.correlation, results.join = analytics.engagement_performance(
                learner_totals, inputs.finals, config.correlation)
        except DegenerateInput as exc:
            results.correlation_error = str(exc)
            results.notes.append(f"correlation unavailable: {exc}")
            log.warning("event=correlation status=degenerate reason=%s", exc)
    results.bloom, bloom_notes = analytics.bloom_distribution(inputs.tagmap, tree)
    results.notes.extend(bloom_notes)
    results.edges, results.groups = analytics.bipartite_edges(tree, inputs.tagmap)

    cov = coverage(inputs)
    results.coverage = cov.as_dict()
    results.diagnostics = {
        "ingest": stats.as_dict(),
        "events": {
            "learners": len(segments),
            "unmapped_events": unmapped_events,
            "unmapped_refs_top": [[ref, n] for ref, n in
                                  sorted(unmapped_refs.items(), key=lambda kv: (-kv[1], kv[0]))[:20]],
            "segment_dwell_ms": segment_dwell_ms,
            "module_dwell_ms": sum(attribution.module_ms.values()),
            "unmapped_dwell_ms": sum(attribution.unmapped_ms.values()),
            "untagged_module_dwell_ms": sum(untagged_dwell.values()),
        },
        "tags": inputs.tag_report.as_dict(),
        "grades": inputs.grade_report.as_dict(),
        "join": None if results.join is None else vars(results.join),
        "config": {"break_seconds": config.break_seconds, "terminal_dwell": config.terminal_dwell,
                   "pass_threshold": config.pass_threshold, "correlation": config.correlation},
        "notes": list(results.notes),
    }
    return results


def validate(config: RunConfig) -> tuple[dict, int]:
    """Parse everything, run coverage; returns (diagnostics, number of findings)."""
    inputs = load_inputs(config)
    records, stats = load_events(config, inputs.exclusions)
    _, stats.duplicates = partition_and_sort(records)
    cov = coverage(inputs)
    report = inputs.grade_report
    findings = (cov.finding_count + len(inputs.tag_report.violations) + len(report.errors)
                + len(report.unknown_sequentials))
    diagnostics = {
        "coverage": cov.as_dict(),
        "ingest": stats.as_dict(),
        "tags": inputs.tag_report.as_dict(),
        "grades": report.as_dict(),
        "tree": {"modules": len(inputs.tree), "leaves": len(inputs.tree.leaves),
                 "chapters": len(inputs.tree.of_kind(Kind.CHAPTER))},
        "findings": findings,
        "notes": inputs.notes,
    }
    return diagnostics, findings
