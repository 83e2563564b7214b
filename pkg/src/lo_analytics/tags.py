"""Learning-objective registry, activity tags (LO codes + Bloom level) and coverage checks."""

from __future__ import annotations

import csv
import io
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Mapping

from .course_model import ASSESSMENT_TYPES, CourseTree
from .errors import DuplicateCode, MalformedRow, TagError

MAX_LOS_PER_ACTIVITY = 3


class Bloom(IntEnum):
    REMEMBER = 1
    UNDERSTAND = 2
    APPLY = 3
    ANALYZE = 4
    EVALUATE = 5
    CREATE = 6

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, text: str) -> "Bloom":
        value = text.strip()
        if value.isdigit():
            return cls(int(value))
        try:
            return cls[value.upper()]
        except KeyError:
            raise ValueError(f"unknown Bloom level {text!r}") from None


def lo_sort_key(code: str):
    """Natural ordering so LO1.10 follows LO1.9."""
    return tuple((0, int(tok), "") if tok.isdigit() else (1, 0, tok)
                 for tok in re.findall(r"\d+|\D+", code))


@dataclass(frozen=True)
class LearningObjective:
    code: str
    group: str
    description: str = ""
    week: int | None = None


class LoRegistry(dict):
    """``code -> LearningObjective`` in natural code order."""

    @property
    def groups(self) -> list[str]:
        return sorted({lo.group for lo in self.values()}, key=lo_sort_key)

    def codes(self) -> list[str]:
        return sorted(self, key=lo_sort_key)


@dataclass(frozen=True)
class TagRecord:
    module_id: str
    lo_codes: tuple[str, ...]
    bloom: Bloom


@dataclass(frozen=True)
class TagViolation:
    line_no: int
    module_id: str
    message: str


@dataclass
class TagMap:
    records: dict[str, TagRecord] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, module_id: object) -> bool:
        return module_id in self.records

    def __iter__(self):
        return iter(self.records.values())

    def get(self, module_id: str) -> TagRecord | None:
        return self.records.get(module_id)

    def effective(self, tree: CourseTree, module_id: str) -> TagRecord | None:
        """Tag on the module itself, else on its nearest tagged ancestor."""
        for module in tree.ancestors(module_id):
            record = self.records.get(module.id)
            if record is not None:
                return record
        return None


def _rows(text: str) -> Iterable[tuple[int, list[str]]]:
    for line_no, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip():
            continue
        yield line_no, [cell.strip() for cell in row]


def load_lo_registry(text: str) -> LoRegistry:
    """Parse ``code,group,description,week[,weight]``; the header row is optional."""
    registry = LoRegistry()
    for line_no, row in _rows(text):
        if row[0].lower() == "code":
            continue
        if len(row) < 1 or len(row) > 5:
            raise MalformedRow("expected code,group,description,week", line_no)
        row = row + [""] * (4 - len(row))
        code, group, description, week = row[:4]
        if not code:
            raise MalformedRow("empty learning objective code", line_no)
        group = group or code.split(".", 1)[0]
        if not code.startswith(group):
            raise MalformedRow(f"group {group!r} is not a prefix of {code!r}", line_no)
        week_no: int | None = None
        if week:
            try:
                week_no = int(week)
            except ValueError:
                raise MalformedRow(f"week {week!r} is not an integer", line_no) from None
        if code in registry:
            raise DuplicateCode(code, line_no)
        registry[code] = LearningObjective(code, group, description, week_no)
    return LoRegistry(sorted(registry.items(), key=lambda kv: lo_sort_key(kv[0])))


@dataclass
class TagReport:
    violations: list[TagViolation] = field(default_factory=list)
    rows: int = 0

    @property
    def valid(self) -> int:
        return self.rows - len({v.line_no for v in self.violations})

    def as_dict(self) -> dict:
        return {
            "rows": self.rows,
            "valid": self.valid,
            "violations": [
                {"line": v.line_no, "module_id": v.module_id, "message": v.message}
                for v in self.violations
            ],
        }


def load_tags(text: str, registry: Mapping[str, LearningObjective],
              tree: CourseTree) -> tuple[TagMap, TagReport]:
    """Validate ``module_id,lo_codes,bloom_level`` rows; bad rows are reported and dropped."""
    tagmap = TagMap()
    report = TagReport()
    for line_no, row in _rows(text):
        if row[0].lower() == "module_id":
            continue
        report.rows += 1
        module_id = row[0]

        def bad(message: str) -> None:
            report.violations.append(TagViolation(line_no, module_id, message))

        if len(row) != 3:
            bad("expected module_id,lo_codes,bloom_level")
            continue
        problems: list[str] = []
        if module_id not in tree:
            problems.append("unknown module")
        elif module_id in tagmap:
            problems.append("module tagged more than once")
        codes = [c.strip() for c in row[1].split(";") if c.strip()]
        if not codes:
            problems.append("no LOs")
        if len(codes) > MAX_LOS_PER_ACTIVITY:
            problems.append("too many LOs")
        if len(set(codes)) != len(codes):
            problems.append("repeated LO")
        unknown = [c for c in codes if c not in registry]
        if unknown:
            problems.append(f"unknown LO {', '.join(unknown)}")
        try:
            bloom = Bloom.parse(row[2])
        except ValueError:
            problems.append(f"bad Bloom level {row[2]!r}")
        for message in problems:
            bad(message)
        if problems:
            continue
        tagmap.records[module_id] = TagRecord(module_id, tuple(codes), bloom)
    if report.rows and not tagmap.records:
        raise TagError(f"none of the {report.rows} tag rows are valid")
    return tagmap, report


@dataclass
class CoverageReport:
    untagged_leaves: list[str]
    untagged_los: list[str]
    unassessed_los: list[str]
    tag_histogram: dict[str, int]

    @property
    def finding_count(self) -> int:
        return len(self.untagged_leaves) + len(self.untagged_los) + len(self.unassessed_los)

    def as_dict(self) -> dict:
        return {
            "untagged_leaves": self.untagged_leaves,
            "los_without_activities": self.untagged_los,
            "los_without_assessment": self.unassessed_los,
            "tag_histogram": self.tag_histogram,
        }


def is_graded_activity(tree: CourseTree, module_id: str,
                       graded_sequentials: frozenset[str] | set[str] | None) -> bool:
    """An assessment block, optionally restricted to sequentials that carry points."""
    module = tree.modules[module_id]
    if module.block_type not in ASSESSMENT_TYPES:
        return False
    if graded_sequentials is None:
        return True
    return any(m.id in graded_sequentials for m in tree.ancestors(module_id))


def coverage_report(tree: CourseTree, tagmap: TagMap, registry: Mapping[str, LearningObjective],
                    graded_sequentials: Iterable[str] | None = None) -> CoverageReport:
    graded = None if graded_sequentials is None else frozenset(graded_sequentials)
    untagged = [leaf for leaf in tree.leaves if tagmap.effective(tree, leaf) is None]
    histogram: Counter = Counter()
    assessed: set[str] = set()
    for record in tagmap:
        histogram.update(record.lo_codes)
        if is_graded_activity(tree, record.module_id, graded):
            assessed.update(record.lo_codes)
    codes = sorted(registry, key=lo_sort_key)
    return CoverageReport(
        untagged_leaves=untagged,
        untagged_los=[c for c in codes if histogram[c] == 0],
        unassessed_los=[c for c in codes if histogram[c] > 0 and c not in assessed],
        tag_histogram={c: histogram[c] for c in codes},
    )
