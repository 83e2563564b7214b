"""Course structure: parsing, validation, linearization and reference lookup.

A course is a five-level tree (root, chapter, sequential, vertical, block).
Only depth-4 blocks are content leaves; they form the base map when visited
depth-first in sibling order.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from types import MappingProxyType
from typing import Any, Iterator, Mapping

from .errors import MalformedDocument, MalformedRow, NoWeek, StructuralError, UnknownModule

MAX_DEPTH = 4
SUPPLEMENTAL_WEEK = 0


class Kind(str, Enum):
    COURSE_ROOT = "course_root"
    CHAPTER = "chapter"
    SEQUENTIAL = "sequential"
    VERTICAL = "vertical"
    BLOCK = "block"

    @property
    def depth(self) -> int:
        return _KIND_ORDER.index(self)


_KIND_ORDER = [Kind.COURSE_ROOT, Kind.CHAPTER, Kind.SEQUENTIAL, Kind.VERTICAL, Kind.BLOCK]

BLOCK_TYPES = ("html", "problem", "video", "discussion", "openassessment", "other")
ASSESSMENT_TYPES = frozenset({"problem", "openassessment"})


@dataclass(frozen=True)
class ContentModule:
    id: str
    kind: Kind
    block_type: str
    display_name: str
    parent_id: str | None
    ordinal: int
    depth: int

    @property
    def is_leaf(self) -> bool:
        return self.depth == MAX_DEPTH


@dataclass(frozen=True, eq=False)
class CourseTree:
    course_id: str
    title: str
    modules: Mapping[str, ContentModule]
    children: Mapping[str, tuple[str, ...]]
    root_id: str
    week_overrides: Mapping[str, int] = field(default_factory=dict)

    def __contains__(self, module_id: object) -> bool:
        return module_id in self.modules

    def __len__(self) -> int:
        return len(self.modules)

    def get(self, module_id: str) -> ContentModule:
        try:
            return self.modules[module_id]
        except KeyError:
            raise UnknownModule(f"unknown module {module_id!r}") from None

    def ancestors(self, module_id: str) -> Iterator[ContentModule]:
        """Yield the module itself, then each ancestor up to the root."""
        module = self.get(module_id)
        while True:
            yield module
            if module.parent_id is None:
                return
            module = self.modules[module.parent_id]

    def chapter_of(self, module_id: str) -> ContentModule | None:
        for module in self.ancestors(module_id):
            if module.kind is Kind.CHAPTER:
                return module
        return None

    def descendants(self, module_id: str) -> Iterator[ContentModule]:
        """Depth-first, sibling-ordered descendants (excluding the module itself)."""
        self.get(module_id)
        stack = list(reversed(self.children.get(module_id, ())))
        while stack:
            current = stack.pop()
            yield self.modules[current]
            stack.extend(reversed(self.children.get(current, ())))

    def of_kind(self, kind: Kind) -> list[ContentModule]:
        """Modules of one level, in base-map order."""
        if kind is Kind.COURSE_ROOT:
            return [self.modules[self.root_id]]
        return [m for m in self.descendants(self.root_id) if m.kind is kind]

    @cached_property
    def leaves(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.descendants(self.root_id) if m.depth == MAX_DEPTH)

    @cached_property
    def _resolver(self) -> "_RefResolver":
        return _RefResolver(self.modules.keys())

    def with_week_overrides(self, overrides: Mapping[str, int]) -> "CourseTree":
        for chapter_id, week in overrides.items():
            if self.get(chapter_id).kind is not Kind.CHAPTER:
                raise StructuralError(f"week override targets non-chapter {chapter_id!r}", chapter_id)
            if week < 0:
                raise StructuralError(f"negative week for {chapter_id!r}", chapter_id)
        return CourseTree(
            course_id=self.course_id,
            title=self.title,
            modules=self.modules,
            children=self.children,
            root_id=self.root_id,
            week_overrides=MappingProxyType(dict(overrides)),
        )


def _require(entry: Mapping[str, Any], key: str, index: int) -> Any:
    if key not in entry:
        raise MalformedDocument(f"modules[{index}] is missing {key!r}")
    return entry[key]


def parse_course_tree(document: str | bytes | Mapping[str, Any]) -> CourseTree:
    """Build a validated tree from a course-structure document.

    ``document`` may be the raw JSON text or an already-decoded mapping.
    """
    if isinstance(document, (str, bytes, bytearray)):
        try:
            data = json.loads(document)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise MalformedDocument(f"course structure is not valid JSON: {exc}") from None
    else:
        data = document
    if not isinstance(data, Mapping):
        raise MalformedDocument("course structure must be a JSON object")
    raw_modules = data.get("modules")
    if not isinstance(raw_modules, list):
        raise MalformedDocument("course structure needs a 'modules' array")

    entries: list[dict[str, Any]] = []
    seen: set[str] = set()
    for index, entry in enumerate(raw_modules):
        if not isinstance(entry, Mapping):
            raise MalformedDocument(f"modules[{index}] is not an object")
        module_id = _require(entry, "id", index)
        if not isinstance(module_id, str) or not module_id:
            raise MalformedDocument(f"modules[{index}].id must be a non-empty string")
        try:
            kind = Kind(_require(entry, "kind", index))
        except ValueError:
            raise MalformedDocument(f"module {module_id!r} has unknown kind {entry['kind']!r}") from None
        parent_id = entry.get("parent_id")
        if parent_id is not None and not isinstance(parent_id, str):
            raise MalformedDocument(f"module {module_id!r} has a non-string parent_id")
        ordinal = entry.get("ordinal")
        if ordinal is not None and (isinstance(ordinal, bool) or not isinstance(ordinal, int)):
            raise MalformedDocument(f"module {module_id!r} has a non-integer ordinal")
        block_type = entry.get("block_type") or "other"
        if block_type not in BLOCK_TYPES:
            block_type = "other"
        display_name = entry.get("display_name") or ""
        if module_id in seen:
            raise StructuralError(f"duplicate module id {module_id!r}", module_id)
        seen.add(module_id)
        entries.append(
            dict(id=module_id, kind=kind, parent_id=parent_id, ordinal=ordinal,
                 block_type=block_type, display_name=str(display_name))
        )

    by_id = {e["id"]: e for e in entries}
    for e in entries:
        if e["parent_id"] is not None and e["parent_id"] not in by_id:
            raise StructuralError(
                f"module {e['id']!r} references missing parent {e['parent_id']!r}", e["id"]
            )

    depths: dict[str, int] = {}
    for e in entries:
        path: list[str] = []
        on_path: set[str] = set()
        current: str | None = e["id"]
        while current is not None and current not in depths:
            if current in on_path:
                raise StructuralError(f"cycle through module {current!r}", current)
            path.append(current)
            on_path.add(current)
            current = by_id[current]["parent_id"]
        base = -1 if current is None else depths[current]
        for offset, module_id in enumerate(reversed(path), start=1):
            depths[module_id] = base + offset

    roots = [e["id"] for e in entries if e["parent_id"] is None]
    if len(roots) != 1:
        raise StructuralError(f"expected exactly one root, found {len(roots)}: {roots[:5]}",
                              roots[1] if len(roots) > 1 else None)
    for e in entries:
        depth = depths[e["id"]]
        if depth > MAX_DEPTH:
            raise StructuralError(f"module {e['id']!r} sits at depth {depth} (max {MAX_DEPTH})", e["id"])
        if e["kind"].depth != depth:
            raise StructuralError(
                f"module {e['id']!r} has kind {e['kind'].value} but depth {depth}", e["id"]
            )

    siblings: dict[str, list[dict[str, Any]]] = {}
    for e in entries:
        if e["parent_id"] is not None:
            siblings.setdefault(e["parent_id"], []).append(e)
    children: dict[str, tuple[str, ...]] = {}
    ordinals: dict[str, int] = {roots[0]: by_id[roots[0]]["ordinal"] or 0}
    for parent_id, group in siblings.items():
        # missing ordinals fall back to file position among siblings
        assigned = [(e["ordinal"] if e["ordinal"] is not None else pos, e["id"])
                    for pos, e in enumerate(group)]
        if sorted(o for o, _ in assigned) != list(range(len(group))):
            raise StructuralError(
                f"children of {parent_id!r} have non-contiguous ordinals "
                f"{sorted(o for o, _ in assigned)}", parent_id
            )
        assigned.sort()
        children[parent_id] = tuple(module_id for _, module_id in assigned)
        ordinals.update({module_id: o for o, module_id in assigned})

    modules = {
        e["id"]: ContentModule(
            id=e["id"], kind=e["kind"], block_type=e["block_type"], display_name=e["display_name"],
            parent_id=e["parent_id"], ordinal=ordinals[e["id"]], depth=depths[e["id"]],
        )
        for e in entries
    }
    root = by_id[roots[0]]
    return CourseTree(
        course_id=str(data.get("course_id") or root["id"]),
        title=str(data.get("title") or root["display_name"]),
        modules=MappingProxyType(modules),
        children=MappingProxyType(children),
        root_id=roots[0],
    )


def serialize(tree: CourseTree) -> dict[str, Any]:
    """Inverse of :func:`parse_course_tree`; modules are emitted in base-map order."""
    order = [tree.modules[tree.root_id], *tree.descendants(tree.root_id)]
    return {
        "course_id": tree.course_id,
        "title": tree.title,
        "modules": [
            {
                "id": m.id,
                "kind": m.kind.value,
                "block_type": m.block_type,
                "display_name": m.display_name,
                "parent_id": m.parent_id,
                "ordinal": m.ordinal,
            }
            for m in order
        ],
    }


def linearize(tree: CourseTree) -> list[str]:
    return list(tree.leaves)


def week_of(tree: CourseTree, module_id: str, overrides: Mapping[str, int] | None = None) -> int:
    """Week index of a module: 1 + its chapter's ordinal unless overridden (0 = supplemental)."""
    chapter = tree.chapter_of(module_id)
    if chapter is None:
        raise NoWeek(f"module {module_id!r} is the course root and belongs to no week")
    table = tree.week_overrides if overrides is None else overrides
    if chapter.id in table:
        return table[chapter.id]
    return chapter.ordinal + 1


def load_week_overrides(text: str, tree: CourseTree) -> dict[str, int]:
    """Parse a ``chapter_id,week`` CSV (header optional)."""
    overrides: dict[str, int] = {}
    for line_no, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip():
            continue
        if line_no == 1 and row[0].strip() == "chapter_id":
            continue
        if len(row) != 2:
            raise MalformedRow("expected chapter_id,week", line_no)
        chapter_id, week = row[0].strip(), row[1].strip()
        try:
            week_no = int(week)
        except ValueError:
            raise MalformedRow(f"week {week!r} is not an integer", line_no) from None
        if chapter_id not in tree:
            raise MalformedRow(f"unknown chapter {chapter_id!r}", line_no)
        if tree.modules[chapter_id].kind is not Kind.CHAPTER:
            raise MalformedRow(f"{chapter_id!r} is not a chapter", line_no)
        if week_no < 0:
            raise MalformedRow("week must be >= 0", line_no)
        overrides[chapter_id] = week_no
    return overrides


def _final_component(ref: str) -> str:
    text = ref.strip()
    for sep in ("?", "#"):
        text = text.split(sep, 1)[0]
    text = text.rstrip("/").rsplit("/", 1)[-1]
    return text.rsplit("@", 1)[-1]


class _RefResolver:
    def __init__(self, ids):
        self._ids = frozenset(ids)
        self._by_tail: dict[str, list[str]] = {}
        for i in sorted(self._ids):
            self._by_tail.setdefault(_final_component(i), []).append(i)
        self._cache: dict[str, str | None] = {}

    def __call__(self, ref: str | None) -> str | None:
        if not ref:
            return None
        try:
            return self._cache[ref]
        except KeyError:
            pass
        if ref in self._ids:
            found: str | None = ref
        else:
            tail = _final_component(ref)
            matches = self._by_tail.get(tail, []) if tail else []
            found = matches[0] if len(matches) == 1 else None
        self._cache[ref] = found
        return found


def resolve_event_ref(tree: CourseTree, ref: str | None) -> str | None:
    """Map an event's module reference onto a module id; ambiguity resolves to ``None``."""
    return tree._resolver(ref)
