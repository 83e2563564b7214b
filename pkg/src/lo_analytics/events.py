"""Clickstream ingestion, per-learner ordering, dwell sessionization and attribution."""

from __future__ import annotations

import glob
import gzip
import json
import logging
import os
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import InputIoError, UnsortedInput

log = logging.getLogger(__name__)

DEFAULT_BREAK_S = 600.0
SOURCES = ("browser", "server", "mobile")

SKIP_MALFORMED = "malformed"
SKIP_MISSING_LEARNER = "missing_learner"
SKIP_BAD_TIMESTAMP = "bad_timestamp"

TERMINAL_ZERO = "zero"
TERMINAL_CAP = "cap"

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_MS = timedelta(milliseconds=1)
_ISO = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2}):(\d{2})(?:[.,](\d+))?"
    r"(Z|z|[+-]\d{2}:?\d{2})$"
)


@dataclass(frozen=True, slots=True)
class EventRecord:
    learner_id: str
    timestamp_ms: int
    event_type: str
    module_ref: str | None
    source: str
    line_no: int

    @property
    def timestamp(self) -> datetime:
        return _EPOCH + self.timestamp_ms * _MS


@dataclass(frozen=True, slots=True)
class Skip:
    reason: str
    line_no: int


@dataclass(frozen=True, slots=True)
class DwellSegment:
    learner_id: str
    module_id: str | None
    start_ms: int
    dwell_ms: int

    @property
    def dwell_s(self) -> float:
        return self.dwell_ms / 1000

    @property
    def start(self) -> datetime:
        return _EPOCH + self.start_ms * _MS


def parse_timestamp_ms(text: str) -> int:
    """ISO-8601 instant with an explicit offset -> epoch milliseconds (sub-ms truncated)."""
    m = _ISO.match(text.strip())
    if m is None:
        raise ValueError(f"not an ISO-8601 instant with timezone: {text!r}")
    year, month, day, hour, minute, second, frac, tz = m.groups()
    if tz in ("Z", "z"):
        offset = timedelta(0)
    else:
        sign = -1 if tz[0] == "-" else 1
        digits = tz[1:].replace(":", "")
        offset = sign * timedelta(hours=int(digits[:2]), minutes=int(digits[2:]))
    dt = datetime(int(year), int(month), int(day), int(hour), int(minute), int(second),
                  tzinfo=timezone(offset))
    millis = int((frac or "0")[:3].ljust(3, "0"))
    return (dt - _EPOCH) // _MS + millis


def format_timestamp_ms(ms: int) -> str:
    dt = _EPOCH + ms * _MS
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ms % 1000:03d}Z"


def _module_ref(obj: Mapping) -> str | None:
    event = obj.get("event")
    if isinstance(event, str) and event.startswith("{"):
        try:
            event = json.loads(event)
        except json.JSONDecodeError:
            event = None
    if isinstance(event, Mapping):
        ref = event.get("id")
        if isinstance(ref, str) and ref:
            return ref
    page = obj.get("page")
    if isinstance(page, str) and page:
        return page
    return None


def parse_event_line(line: str, line_no: int = 0) -> EventRecord | Skip:
    if not line or not line.strip():
        return Skip(SKIP_MALFORMED, line_no)
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        return Skip(SKIP_MALFORMED, line_no)
    if not isinstance(obj, dict):
        return Skip(SKIP_MALFORMED, line_no)
    learner = obj.get("username")
    if not isinstance(learner, str) or not learner.strip():
        return Skip(SKIP_MISSING_LEARNER, line_no)
    stamp = obj.get("time")
    if not isinstance(stamp, str):
        return Skip(SKIP_BAD_TIMESTAMP, line_no)
    try:
        ts = parse_timestamp_ms(stamp)
    except (ValueError, OverflowError):
        return Skip(SKIP_BAD_TIMESTAMP, line_no)
    event_type = obj.get("event_type")
    if not isinstance(event_type, str) or not event_type:
        return Skip(SKIP_MALFORMED, line_no)
    source = obj.get("event_source")
    if source not in SOURCES:
        source = "server"
    return EventRecord(learner.strip(), ts, event_type, _module_ref(obj), source, line_no)


def expand_event_paths(spec: str | os.PathLike | Sequence[str | os.PathLike]) -> list[Path]:
    """A file, a directory (``*.ndjson``/``*.json``/``*.log`` and gz variants) or a glob."""
    items = [spec] if isinstance(spec, (str, os.PathLike)) else list(spec)
    found: list[Path] = []
    for item in items:
        path = Path(item)
        if path.is_dir():
            for pattern in ("*.ndjson", "*.json", "*.log", "*.ndjson.gz", "*.json.gz", "*.log.gz"):
                found.extend(path.glob(pattern))
        elif path.exists():
            found.append(path)
        else:
            matches = [Path(p) for p in glob.glob(str(item))]
            if not matches:
                raise InputIoError(item, "no event files found")
            found.extend(matches)
    return sorted(set(found))


def read_lines(paths: Iterable[Path]) -> Iterator[str]:
    for path in paths:
        opener = gzip.open if str(path).endswith(".gz") else open
        try:
            with opener(path, "rt", encoding="utf-8", errors="replace") as fh:
                for line in fh:
                    yield line.rstrip("\n")
        except OSError as exc:
            raise InputIoError(path, str(exc)) from None


@dataclass
class IngestStats:
    lines: int = 0
    parsed: int = 0
    skipped: Counter = field(default_factory=Counter)
    excluded: int = 0
    duplicates: int = 0
    out_of_order: int = 0

    def as_dict(self) -> dict:
        return {
            "lines": self.lines,
            "parsed": self.parsed,
            "skipped": {k: self.skipped.get(k, 0)
                        for k in (SKIP_MALFORMED, SKIP_MISSING_LEARNER, SKIP_BAD_TIMESTAMP)},
            "excluded": self.excluded,
            "duplicates": self.duplicates,
            "out_of_order": self.out_of_order,
        }


def ingest(lines: Iterable[str], exclude: frozenset[str] | set[str] = frozenset(),
           stats: IngestStats | None = None) -> tuple[list[EventRecord], IngestStats]:
    """Parse a line stream; bad lines are counted, never fatal.

    ``out_of_order`` counts events older than an earlier-ingested event of the
    same learner.
    """
    stats = stats or IngestStats()
    records: list[EventRecord] = []
    latest: dict[str, int] = {}
    for line in lines:
        stats.lines += 1
        item = parse_event_line(line, stats.lines)
        if isinstance(item, Skip):
            stats.skipped[item.reason] += 1
            continue
        if item.learner_id in exclude:
            stats.excluded += 1
            continue
        stats.parsed += 1
        last = latest.get(item.learner_id)
        if last is not None and item.timestamp_ms < last:
            stats.out_of_order += 1
        else:
            latest[item.learner_id] = item.timestamp_ms
        records.append(item)
    return records, stats


def _order_key(e: EventRecord):
    # ties on timestamp broken by content before ingestion order so that
    # shuffled inputs sessionize identically
    return (e.timestamp_ms, e.event_type, e.module_ref or "", e.source, e.line_no)


def partition_and_sort(records: Iterable[EventRecord]) -> tuple[dict[str, list[EventRecord]], int]:
    """Group by learner, order in time, collapse exact duplicates.

    Returns the partitions (keyed in sorted learner order) and the number of
    duplicates removed.
    """
    groups: dict[str, list[EventRecord]] = {}
    for r in records:
        groups.setdefault(r.learner_id, []).append(r)
    removed = 0
    out: dict[str, list[EventRecord]] = {}
    for learner in sorted(groups):
        ordered = sorted(groups[learner], key=_order_key)
        kept: list[EventRecord] = []
        prev = None
        for e in ordered:
            key = (e.timestamp_ms, e.event_type, e.module_ref)
            if key == prev:
                removed += 1
                continue
            prev = key
            kept.append(e)
        out[learner] = kept
    return out, removed


def sessionize(events: Sequence[EventRecord], break_s: float = DEFAULT_BREAK_S, *,
               resolve: Callable[[str | None], str | None] | None = None,
               terminal_dwell: str = TERMINAL_ZERO) -> list[DwellSegment]:
    """One dwell segment per event: the gap to the next event, or a terminal value
    when the gap exceeds ``break_s`` or there is no next event."""
    if break_s <= 0:
        raise ValueError("break_s must be positive")
    if terminal_dwell not in (TERMINAL_ZERO, TERMINAL_CAP):
        raise ValueError(f"terminal_dwell must be 'zero' or 'cap', got {terminal_dwell!r}")
    break_ms = round(break_s * 1000)
    terminal_ms = break_ms if terminal_dwell == TERMINAL_CAP else 0
    resolve = resolve or (lambda ref: ref)
    segments: list[DwellSegment] = []
    n = len(events)
    for i, e in enumerate(events):
        if i + 1 < n:
            nxt = events[i + 1]
            if nxt.learner_id != e.learner_id:
                raise UnsortedInput(f"mixed learners {e.learner_id!r} and {nxt.learner_id!r}")
            gap = nxt.timestamp_ms - e.timestamp_ms
            if gap < 0:
                raise UnsortedInput(f"event line {nxt.line_no} precedes line {e.line_no} in time")
            dwell = gap if gap <= break_ms else terminal_ms
        else:
            dwell = terminal_ms
        segments.append(DwellSegment(e.learner_id, resolve(e.module_ref), e.timestamp_ms, dwell))
    return segments


@dataclass
class Attribution:
    """Dwell totals in integer milliseconds so that conservation is exact."""

    module_ms: dict[tuple[str, str], int] = field(default_factory=dict)
    unmapped_ms: dict[str, int] = field(default_factory=dict)

    def merge(self, other: "Attribution") -> None:
        for key, ms in other.module_ms.items():
            self.module_ms[key] = self.module_ms.get(key, 0) + ms
        for key, ms in other.unmapped_ms.items():
            self.unmapped_ms[key] = self.unmapped_ms.get(key, 0) + ms

    def learner_totals_ms(self) -> dict[str, int]:
        totals = dict(self.unmapped_ms)
        for (learner, _), ms in self.module_ms.items():
            totals[learner] = totals.get(learner, 0) + ms
        return dict(sorted(totals.items()))

    def total_ms(self) -> int:
        return sum(self.module_ms.values()) + sum(self.unmapped_ms.values())


def attribute(segments: Iterable[DwellSegment]) -> Attribution:
    """Sum dwell by learner x module; unresolved segments land in the learner's unmapped bucket."""
    result = Attribution()
    module_ms = result.module_ms
    unmapped = result.unmapped_ms
    for s in segments:
        if s.module_id is None:
            unmapped[s.learner_id] = unmapped.get(s.learner_id, 0) + s.dwell_ms
        else:
            key = (s.learner_id, s.module_id)
            module_ms[key] = module_ms.get(key, 0) + s.dwell_ms
    return result


def sessionize_partitions(partitions: Mapping[str, Sequence[EventRecord]],
                          break_s: float = DEFAULT_BREAK_S, *,
                          resolve: Callable[[str | None], str | None] | None = None,
                          terminal_dwell: str = TERMINAL_ZERO,
                          threads: int = 1) -> tuple[dict[str, list[DwellSegment]], Attribution]:
    """Sessionize and attribute every learner; merged in learner order for any ``threads``."""
    learners = sorted(partitions)

    def work(learner: str):
        segs = sessionize(partitions[learner], break_s, resolve=resolve, terminal_dwell=terminal_dwell)
        return segs, attribute(segs)

    if threads > 1 and len(learners) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, learners))
    else:
        results = [work(learner) for learner in learners]
    segments: dict[str, list[DwellSegment]] = {}
    total = Attribution()
    for learner, (segs, attr) in zip(learners, results):
        segments[learner] = segs
        total.merge(attr)
    total.module_ms = dict(sorted(total.module_ms.items()))
    total.unmapped_ms = dict(sorted(total.unmapped_ms.items()))
    return segments, total


def load_exclusions(text: str) -> frozenset[str]:
    return frozenset(line.strip() for line in text.splitlines()
                     if line.strip() and not line.lstrip().startswith("#"))
