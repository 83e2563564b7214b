"""Seeded synthetic course + cohort generator with exact ground truth.

Everything derives from one ``numpy.random.SeedSequence``: one child stream
for the course, one per learner, so a learner's data never depends on how
many other learners are generated or in which order.
"""

from __future__ import annotations

import dataclasses
import gzip
import hashlib
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .course_model import Kind
from .errors import SpecError
from .events import format_timestamp_ms

ORG_KEY = "DemoX+AM101+2018"
BASE_TIME_MS = 1519862400000  # 2018-03-01T00:00:00Z
STAFF_IDS = ("staff_course_dev", "staff_instructor")
UNMAPPED_PAGE = "https://courses.example.edu/dashboard"

DEFAULT_BLOOM_EARLY = (0.30, 0.55, 0.10, 0.05, 0.0, 0.0)
DEFAULT_BLOOM_LATE = (0.05, 0.15, 0.30, 0.25, 0.15, 0.10)
DEFAULT_BLOOM_SUPPLEMENTAL = (0.40, 0.50, 0.10, 0.0, 0.0, 0.0)


def default_bloom_profile(weeks: int) -> dict[int, tuple[float, ...]]:
    profile = {w: DEFAULT_BLOOM_EARLY if w <= 6 else DEFAULT_BLOOM_LATE for w in range(1, weeks + 1)}
    profile[0] = DEFAULT_BLOOM_SUPPLEMENTAL
    return profile


@dataclass
class CohortSpec:
    n_learners: int = 930
    weeks: int = 6
    activities_total: int = 983
    lo_count: int = 31
    planted_rho: float = 0.56
    bloom_profile: dict[int, tuple[float, ...]] | None = None
    break_s: float = 600.0
    seed: int = 42
    events_per_learner: int = 40
    sequentials_per_chapter: int = 3
    verticals_per_sequential: int = 2
    supplemental_share: float = 0.1
    pass_threshold: float = 0.6
    staff: bool = True
    compress: bool = False
    # planted defects; all zero/False for a clean fixture
    untagged_leaves: int = 0
    assessment_free_lo: bool = False
    duplicate_lines: int = 0
    out_of_order: int = 0
    zero_possible_sequentials: int = 0

    def __post_init__(self):
        if self.bloom_profile is None:
            self.bloom_profile = default_bloom_profile(self.weeks)
        else:
            self.bloom_profile = {int(k): tuple(float(x) for x in v)
                                  for k, v in self.bloom_profile.items()}

    def validate(self) -> None:
        for name in ("n_learners", "weeks", "activities_total", "lo_count", "events_per_learner",
                     "sequentials_per_chapter", "verticals_per_sequential"):
            if getattr(self, name) < 1:
                raise SpecError(f"{name} must be >= 1")
        if not -1.0 <= self.planted_rho <= 1.0:
            raise SpecError(f"planted_rho must lie in [-1, 1], got {self.planted_rho}")
        if self.activities_total < self.weeks:
            raise SpecError("need at least one activity per week")
        if self.lo_count < self.weeks:
            raise SpecError("need at least one learning objective per week")
        if self.lo_count > 3 * self.activities_total:
            raise SpecError("too many learning objectives to tag every one")
        if self.break_s < 3:
            raise SpecError("break_s must be at least 3 seconds")
        if not 0.0 <= self.supplemental_share < 1.0:
            raise SpecError("supplemental_share must lie in [0, 1)")
        if not 0.0 <= self.pass_threshold <= 1.0:
            raise SpecError("pass_threshold must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise SpecError("seed must be a 64-bit unsigned integer")
        for week in range(1, self.weeks + 1):
            if week not in self.bloom_profile:
                raise SpecError(f"bloom_profile lacks week {week}")
        for week, weights in self.bloom_profile.items():
            if len(weights) != 6 or any(w < 0 for w in weights):
                raise SpecError(f"bloom_profile[{week}] needs six non-negative weights")
            if abs(math.fsum(weights) - 1.0) > 1e-9:
                raise SpecError(f"bloom_profile[{week}] weights sum to {math.fsum(weights)}, not 1")
        for name in ("untagged_leaves", "duplicate_lines", "out_of_order", "zero_possible_sequentials"):
            if getattr(self, name) < 0:
                raise SpecError(f"{name} must be >= 0")

    @property
    def n_supplemental(self) -> int:
        return round(self.supplemental_share * self.activities_total)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "CohortSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise SpecError(f"unknown spec keys: {', '.join(unknown)}")
        try:
            return cls(**dict(data))
        except (TypeError, ValueError) as exc:
            raise SpecError(str(exc)) from None


# ---------------------------------------------------------------- course

@dataclass
class Course:
    document: dict
    registry_rows: list[tuple[str, str, str, int]]
    tags: dict[str, tuple[tuple[str, ...], int]]
    week_overrides: dict[str, int]
    leaf_week: dict[str, int]
    leaf_order: list[str]
    block_type: dict[str, str]
    sequential_leaves: dict[str, list[str]]
    graded_sequentials: list[str]
    ungraded_sequentials: list[str]
    problem_points: dict[str, int]
    untagged_leaves: list[str] = field(default_factory=list)
    assessment_free_los: list[str] = field(default_factory=list)

    @property
    def lo_codes(self) -> list[str]:
        return [row[0] for row in self.registry_rows]


def _split_even(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _block_key(rng: np.random.Generator, block_type: str, used: set[str]) -> str:
    while True:
        token = rng.bytes(16).hex()
        key = f"block-v1:{ORG_KEY}+type@{block_type}+block@{token}"
        if token not in used:
            used.add(token)
            return key


def _lo_groups(spec: CohortSpec) -> list[list[str]]:
    return [[f"LO{w + 1}.{k + 1}" for k in range(size)]
            for w, size in enumerate(_split_even(spec.lo_count, spec.weeks))]


def gen_course(spec: CohortSpec) -> Course:
    spec.validate()
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed).spawn(2)[0])
    used: set[str] = set()
    groups = _lo_groups(spec)
    registry_rows = [(code, f"LO{w + 1}", f"Learning objective {code}", w + 1)
                     for w, codes in enumerate(groups) for code in codes]
    supplemental = spec.n_supplemental
    chapter_sizes = _split_even(spec.activities_total - supplemental, spec.weeks)
    if supplemental:
        chapter_sizes.append(supplemental)

    root_id = f"block-v1:{ORG_KEY}+type@course+block@course"
    modules: list[dict] = [dict(id=root_id, kind=Kind.COURSE_ROOT.value, block_type="other",
                                display_name="Synthetic Demonstration Course",
                                parent_id=None, ordinal=0)]
    leaf_week: dict[str, int] = {}
    leaf_order: list[str] = []
    block_type: dict[str, str] = {}
    sequential_leaves: dict[str, list[str]] = {}
    graded, ungraded = [], []
    week_overrides: dict[str, int] = {}
    vertical_ids: list[tuple[int, str, int]] = []  # (week, vertical id, child count)

    for c_index, n_blocks in enumerate(chapter_sizes):
        is_supp = c_index == spec.weeks
        week = 0 if is_supp else c_index + 1
        chapter_id = _block_key(rng, "chapter", used)
        name = "Supplementary Knowledge Base" if is_supp else f"Week {week}"
        modules.append(dict(id=chapter_id, kind=Kind.CHAPTER.value, block_type="other",
                            display_name=name, parent_id=root_id, ordinal=c_index))
        if is_supp:
            week_overrides[chapter_id] = 0
        n_seq = min(spec.sequentials_per_chapter, n_blocks)
        for s_index, seq_blocks in enumerate(_split_even(n_blocks, n_seq)):
            seq_id = _block_key(rng, "sequential", used)
            modules.append(dict(id=seq_id, kind=Kind.SEQUENTIAL.value, block_type="other",
                                display_name=f"{name}.{s_index + 1}", parent_id=chapter_id,
                                ordinal=s_index))
            sequential_leaves[seq_id] = []
            n_vert = max(1, min(spec.verticals_per_sequential, seq_blocks))
            for v_index, vert_blocks in enumerate(_split_even(seq_blocks, n_vert)):
                vert_id = _block_key(rng, "vertical", used)
                modules.append(dict(id=vert_id, kind=Kind.VERTICAL.value, block_type="other",
                                    display_name=f"{name}.{s_index + 1}.{v_index + 1}",
                                    parent_id=seq_id, ordinal=v_index))
                vertical_ids.append((week, vert_id, vert_blocks))
                for b_index in range(vert_blocks):
                    if is_supp:
                        btype = "video" if b_index % 3 == 0 else "html"
                    elif b_index == vert_blocks - 1 or b_index % 4 == 3:
                        btype = "problem"
                    else:
                        btype = "video" if b_index % 2 == 0 else "html"
                    leaf_id = _block_key(rng, btype, used)
                    modules.append(dict(id=leaf_id, kind=Kind.BLOCK.value, block_type=btype,
                                        display_name=f"{btype} {len(leaf_order) + 1}",
                                        parent_id=vert_id, ordinal=b_index))
                    leaf_week[leaf_id] = week
                    leaf_order.append(leaf_id)
                    block_type[leaf_id] = btype
                    sequential_leaves[seq_id].append(leaf_id)
            if any(block_type[b] == "problem" for b in sequential_leaves[seq_id]):
                graded.append(seq_id)
            else:
                ungraded.append(seq_id)
    # the final graded block of the last week is an open-response assessment
    for leaf in reversed(leaf_order):
        if block_type[leaf] == "problem" and leaf_week[leaf] == spec.weeks:
            block_type[leaf] = "openassessment"
            for m in modules:
                if m["id"] == leaf:
                    m["block_type"] = "openassessment"
            break

    problem_points = {leaf: int(rng.integers(1, 4)) for leaf in leaf_order
                      if block_type[leaf] in ("problem", "openassessment")}

    # tags: every LO is anchored on at least one assessment and one other activity
    supp_group = groups[1] if spec.weeks >= 2 else groups[0]
    tags: dict[str, tuple[tuple[str, ...], int]] = {}
    anchors: Counter = Counter()
    for leaf in leaf_order:
        week = leaf_week[leaf]
        pool = supp_group if week == 0 else groups[week - 1]
        assess = block_type[leaf] in ("problem", "openassessment")
        slot = (week, assess)
        anchor = pool[anchors[slot] % len(pool)]
        anchors[slot] += 1
        k = min(len(pool), int(rng.choice([1, 2, 3], p=[0.5, 0.35, 0.15])))
        others = [c for c in pool if c != anchor]
        extra = list(rng.choice(others, size=k - 1, replace=False)) if k > 1 else []
        codes = tuple([anchor] + [str(c) for c in extra])
        weights = spec.bloom_profile.get(week, DEFAULT_BLOOM_SUPPLEMENTAL)
        level = int(rng.choice(6, p=np.asarray(weights) / math.fsum(weights))) + 1
        tags[leaf] = (codes, level)

    course = Course(
        document={"course_id": f"course-v1:{ORG_KEY}", "title": modules[0]["display_name"],
                  "modules": modules},
        registry_rows=registry_rows, tags=tags, week_overrides=week_overrides,
        leaf_week=leaf_week, leaf_order=leaf_order, block_type=block_type,
        sequential_leaves=sequential_leaves, graded_sequentials=graded,
        ungraded_sequentials=ungraded, problem_points=problem_points,
    )
    _plant_course_defects(spec, course, rng, used, vertical_ids, groups)
    return course


def _plant_course_defects(spec, course: Course, rng, used, vertical_ids, groups) -> None:
    if spec.assessment_free_lo:
        pool = groups[1] if len(groups) > 1 else groups[0]
        if len(pool) < 2:
            raise SpecError("assessment_free_lo needs a group with at least two objectives")
        target = pool[1] if len(pool) > 1 else pool[0]
        for leaf, (codes, level) in course.tags.items():
            if target in codes and course.block_type[leaf] in ("problem", "openassessment"):
                kept = tuple(c for c in codes if c != target)
                if not kept:
                    kept = (pool[0],)
                course.tags[leaf] = (kept, level)
        course.assessment_free_los = [target]
    if spec.untagged_leaves:
        weekly = [v for v in vertical_ids if v[0] != 0]
        for i in range(spec.untagged_leaves):
            week, vert_id, _ = weekly[i % len(weekly)]
            ordinal = sum(1 for m in course.document["modules"] if m["parent_id"] == vert_id)
            leaf_id = _block_key(rng, "html", used)
            course.document["modules"].append(dict(
                id=leaf_id, kind=Kind.BLOCK.value, block_type="html",
                display_name=f"untagged page {i + 1}", parent_id=vert_id, ordinal=ordinal))
            course.untagged_leaves.append(leaf_id)
            course.leaf_week[leaf_id] = week
            course.block_type[leaf_id] = "html"
        # base-map position follows the tree, so rebuild the leaf order
        children: dict[str, list[dict]] = {}
        for m in course.document["modules"]:
            children.setdefault(m["parent_id"], []).append(m)
        order: list[str] = []
        stack = [course.document["modules"][0]]
        while stack:
            m = stack.pop()
            if m["kind"] == Kind.BLOCK.value:
                order.append(m["id"])
            stack.extend(sorted(children.get(m["id"], []), key=lambda c: -c["ordinal"]))
        course.leaf_order = order
        parent = {m["id"]: m["parent_id"] for m in course.document["modules"]}
        for leaf_id in course.untagged_leaves:
            course.sequential_leaves[parent[parent[leaf_id]]].append(leaf_id)
    if spec.zero_possible_sequentials > len(course.ungraded_sequentials):
        raise SpecError(f"only {len(course.ungraded_sequentials)} ungraded sequentials available "
                        f"for zero_possible_sequentials={spec.zero_possible_sequentials}")


# ---------------------------------------------------------------- cohort

@dataclass
class Cohort:
    event_lines: list[str]
    subsection_rows: list[tuple[str, str, float, float]]
    final_rows: list[tuple[str, float, str]]
    ground_truth: dict


def _split_exact(total: int, parts: int, lo: int, hi: int, rng: np.random.Generator) -> list[int]:
    """``parts`` integers in [lo, hi] summing exactly to ``total``."""
    if parts == 0:
        if total:
            raise ValueError("cannot split a non-zero total into zero parts")
        return []
    remainder = total - lo * parts
    room = hi - lo
    if remainder < 0 or remainder > room * parts:
        raise ValueError(f"cannot split {total} into {parts} parts within [{lo}, {hi}]")
    weights = rng.random(parts) + 0.05
    extra = np.minimum(np.floor(remainder * weights / weights.sum()).astype(np.int64), room)
    deficit = remainder - int(extra.sum())
    while deficit > 0:
        open_idx = np.flatnonzero(extra < room)
        step = max(1, deficit // len(open_idx))
        for idx in open_idx:
            add = min(room - int(extra[idx]), step, deficit)
            extra[idx] += add
            deficit -= add
            if deficit == 0:
                break
    return [lo + int(x) for x in extra]


def _event_json(learner: str, ts_ms: int, leaf: str | None, btype: str | None,
                ref_style: str, course: Course) -> tuple[dict, bool]:
    """Build one tracking-log event; returns (event, resolvable)."""
    stamp = format_timestamp_ms(ts_ms)
    base = {"username": learner, "time": stamp, "context": {"course_id": course.document["course_id"]}}
    if leaf is None:
        return {**base, "event_type": "page_view", "event_source": "browser",
                "page": UNMAPPED_PAGE}, False
    token = leaf.rsplit("@", 1)[-1]
    if ref_style == "sequential":
        return {**base, "event_type": "seq_goto", "event_source": "browser",
                "page": f"https://courses.example.edu/courses/{course.document['course_id']}"
                        f"/courseware/{token}/"}, True
    if btype == "video":
        return {**base, "event_type": "play_video", "event_source": "browser",
                "event": json.dumps({"id": token, "currentTime": 0}), "page": None}, True
    if btype in ("problem", "openassessment"):
        return {**base, "event_type": "problem_check", "event_source": "server",
                "event": {"id": leaf, "attempts": 1}}, True
    return {**base, "event_type": "page_view", "event_source": "mobile" if ts_ms % 7 == 0 else "browser",
            "page": f"https://courses.example.edu/jump_to/{leaf}"}, True


def _learner_events(learner: str, dwell_ms: int, rng: np.random.Generator, spec: CohortSpec,
                    course: Course, sequential_of: dict[str, str]):
    """Realize ``dwell_ms`` as an event stream whose sessionized dwell is exactly that."""
    break_ms = round(spec.break_s * 1000)
    min_gap, max_gap = 1000, break_ms - 1000
    target = max(2, int(round(spec.events_per_learner * rng.uniform(0.8, 1.2))))
    sessions = max(1, round(target / 25))
    gaps_needed = max(target - sessions, 1)
    gaps_needed = min(max(gaps_needed, -(-dwell_ms // max_gap)), dwell_ms // min_gap)
    gaps = _split_exact(dwell_ms, gaps_needed, min_gap, max_gap, rng)
    sessions = max(1, min(sessions, gaps_needed + 1))
    cuts = sorted(rng.choice(np.arange(1, gaps_needed + 1), size=sessions - 1, replace=False)) \
        if sessions > 1 else []
    bounds = [0, *[int(c) for c in cuts], gaps_needed]

    ts = BASE_TIME_MS + int(rng.integers(0, 7 * 86_400_000))
    pointer = int(rng.integers(0, max(1, len(course.leaf_order) // 20)))
    stamps: list[int] = []
    dwell_after: list[int] = []
    for s in range(sessions):
        if s:
            ts += break_ms + 1000 + int(rng.integers(0, 2 * 86_400_000))
        stamps.append(ts)
        for g in gaps[bounds[s]:bounds[s + 1]]:
            dwell_after.append(g)
            ts += g
            stamps.append(ts)
        dwell_after.append(0)

    # walk forward through the base map so that a full stream spans the course
    stride = max(1, len(course.leaf_order) // len(stamps))
    events, unmapped_ms = [], 0
    for ts_ms, dwell in zip(stamps, dwell_after):
        roll = rng.random()
        if roll < 0.04:
            event, ok = _event_json(learner, ts_ms, None, None, "", course)
        else:
            leaf = course.leaf_order[pointer % len(course.leaf_order)]
            pointer += int(rng.integers(0, 2 * stride + 1))
            if roll < 0.08:
                event, ok = _event_json(learner, ts_ms, sequential_of[leaf], None, "sequential", course)
            else:
                event, ok = _event_json(learner, ts_ms, leaf, course.block_type[leaf], "block", course)
        if not ok:
            unmapped_ms += dwell
        events.append((ts_ms, event))
    return events, unmapped_ms


def gen_cohort(spec: CohortSpec, course: Course) -> Cohort:
    spec.validate()
    cohort_ss = np.random.SeedSequence(spec.seed).spawn(2)[1]
    learners = [f"learner_{i:05d}" for i in range(1, spec.n_learners + 1)]
    staff = list(STAFF_IDS) if spec.staff else []
    streams = cohort_ss.spawn(len(learners) + len(staff) + 1)
    defect_rng = np.random.default_rng(streams[-1])

    latent, noise, dwell_ms = [], [], []
    rngs = []
    for i in range(len(learners)):
        rng = np.random.default_rng(streams[i])
        rngs.append(rng)
        a, e = rng.standard_normal(2)
        latent.append(a)
        noise.append(e)
        # lognormal total dwell around four hours
        dwell_ms.append(max(120_000, int(round(math.exp(math.log(14_400) + 0.3 * a) * 1000))))

    # grade = linear map of standardized dwell mixed with noise (Gaussian copula
    # on the dwell side); the scale keeps every grade inside [0, 1]
    d = np.asarray(dwell_ms, dtype=float) / 1000
    d_std = (d - d.mean()) / d.std() if d.std() > 0 else np.zeros_like(d)
    rho = spec.planted_rho
    u = rho * d_std + math.sqrt(max(0.0, 1 - rho * rho)) * np.asarray(noise)
    centre = 0.70
    scale = 0.15
    if u.max() > 0:
        scale = min(scale, 0.999 * (1 - centre) / u.max())
    if u.min() < 0:
        scale = min(scale, 0.999 * centre / -u.min())
    grades = [float(min(1.0, max(0.0, centre + scale * x))) for x in u]

    sequential_of: dict[str, str] = {}
    for seq_id, leaves in course.sequential_leaves.items():
        for leaf in leaves:
            sequential_of[leaf] = seq_id

    all_events: list[tuple[int, str, dict]] = []
    unmapped = {}
    for learner, rng, ms in zip(learners, rngs, dwell_ms):
        evs, um = _learner_events(learner, ms, rng, spec, course, sequential_of)
        unmapped[learner] = um
        all_events.extend((ts, learner, ev) for ts, ev in evs)
    staff_truth = {}
    for j, sid in enumerate(staff):
        rng = np.random.default_rng(streams[len(learners) + j])
        evs, _ = _learner_events(sid, 1_800_000, rng, spec, course, sequential_of)
        staff_truth[sid] = len(evs)
        all_events.extend((ts, sid, ev) for ts, ev in evs)
    all_events.sort(key=lambda item: (item[0], item[1]))
    lines = [json.dumps(ev, sort_keys=True, separators=(",", ":")) for _, _, ev in all_events]
    owners = [learner for _, learner, _ in all_events]

    dup_lines = _plant_event_defects(spec, lines, owners, defect_rng)

    # subsection grades
    week_offset = {1: 0.15, 2: -0.20}
    sub_rows: list[tuple[str, str, float, float]] = []
    seq_week = {seq: course.leaf_week[leaves[0]] for seq, leaves in course.sequential_leaves.items() if leaves}
    seq_possible = {seq: float(sum(course.problem_points.get(b, 0) for b in course.sequential_leaves[seq]))
                    for seq in course.graded_sequentials}
    for learner, rng, g in zip(learners, rngs, grades):
        for seq in course.graded_sequentials:
            possible = seq_possible[seq]
            frac = min(1.0, max(0.0, g + week_offset.get(seq_week[seq], 0.0) + 0.08 * rng.standard_normal()))
            earned = min(possible, round(possible * frac, 2))
            sub_rows.append((learner, seq, earned, possible))
        for seq in course.ungraded_sequentials[:spec.zero_possible_sequentials]:
            sub_rows.append((learner, seq, 0.0, 0.0))

    final_rows = [(learner, g, "earned" if g >= spec.pass_threshold else "notpassing")
                  for learner, g in zip(learners, grades)]

    realized_r = float(np.corrcoef(d, np.asarray(grades))[0, 1])
    truth = {
        "spec": _spec_dict(spec),
        "learners": len(learners),
        "events": len(all_events),
        "event_lines": len(lines),
        "total_dwell_ms": dict(zip(learners, dwell_ms)),
        "unmapped_dwell_ms": unmapped,
        "final_grade": dict(zip(learners, grades)),
        "passed": {k: v == "earned" for k, _, v in final_rows},
        "realized_r": realized_r,
        "staff_events": staff_truth,
        "lo_grades": _truth_lo_grades(course, sub_rows),
        "bloom_counts": _truth_bloom(course),
        "bipartite_weights": _truth_bipartite(course),
        "defects": {
            "untagged_leaves": list(course.untagged_leaves),
            "assessment_free_los": list(course.assessment_free_los),
            "duplicate_lines": dup_lines,
            "out_of_order": spec.out_of_order,
            "zero_possible_rows": spec.zero_possible_sequentials * len(learners),
        },
    }
    return Cohort(lines, sub_rows, final_rows, truth)


def _plant_event_defects(spec: CohortSpec, lines: list[str], owners: list[str],
                         rng: np.random.Generator) -> int:
    swapped: set[int] = set()
    if spec.out_of_order:
        positions: dict[str, list[int]] = {}
        for pos, owner in enumerate(owners):
            if owner not in STAFF_IDS:
                positions.setdefault(owner, []).append(pos)
        # candidate pairs (j, j+1) of one learner, spaced so no two pairs touch
        candidates = [(p[j], p[j + 1]) for owner in sorted(positions)
                      for p in [positions[owner]] for j in range(0, len(p) - 1, 3)]
        if spec.out_of_order > len(candidates):
            raise SpecError("not enough events to plant out-of-order pairs")
        for idx in sorted(rng.choice(len(candidates), size=spec.out_of_order, replace=False)):
            a, b = candidates[idx]
            lines[a], lines[b] = lines[b], lines[a]
            swapped.update((a, b))
    if not spec.duplicate_lines:
        return 0
    # copying a displaced line would also register as out-of-order, and staff
    # lines are excluded before duplicates are counted
    eligible = [i for i in range(len(lines)) if i not in swapped and owners[i] not in STAFF_IDS]
    if spec.duplicate_lines > len(eligible):
        raise SpecError("not enough events to plant duplicate lines")
    chosen = sorted(eligible[int(i)] for i in rng.choice(len(eligible), size=spec.duplicate_lines,
                                                         replace=False))
    for offset, idx in enumerate(chosen):
        at = idx + offset
        lines.insert(at + 1, lines[at])
    return spec.duplicate_lines


def _truth_lo_grades(course: Course, rows) -> dict[str, dict[str, list[float]]]:
    seq_los: dict[str, set[str]] = {}
    for seq, leaves in course.sequential_leaves.items():
        seq_los[seq] = {c for leaf in leaves if leaf in course.tags for c in course.tags[leaf][0]}
    acc: dict[tuple[str, str], tuple[list[float], list[float]]] = {}
    for learner, seq, earned, possible in rows:
        if possible <= 0:
            continue
        for code in seq_los[seq]:
            e, p = acc.setdefault((learner, code), ([], []))
            e.append(earned)
            p.append(possible)
    out: dict[str, dict[str, list[float]]] = {}
    for (learner, code), (e, p) in sorted(acc.items()):
        out.setdefault(learner, {})[code] = [math.fsum(e), math.fsum(p)]
    return out


def _truth_bloom(course: Course) -> dict[str, dict[str, int]]:
    counts: dict[int, Counter] = {}
    for leaf, (_, level) in course.tags.items():
        counts.setdefault(course.leaf_week[leaf], Counter())[level] += 1
    return {str(w): {str(level): counts[w][level] for level in range(1, 7)} for w in sorted(counts)}


def _truth_bipartite(course: Course) -> dict[str, dict[str, int]]:
    parent = {m["id"]: m["parent_id"] for m in course.document["modules"]}
    out: dict[str, Counter] = {}
    for leaf, (codes, _) in course.tags.items():
        chapter = parent[parent[parent[leaf]]]
        out.setdefault(chapter, Counter()).update(codes)
    return {ch: dict(sorted(c.items())) for ch, c in out.items()}


def _spec_dict(spec: CohortSpec) -> dict:
    data = dataclasses.asdict(spec)
    data["bloom_profile"] = {str(k): list(v) for k, v in sorted(spec.bloom_profile.items())}
    return data


# ---------------------------------------------------------------- defects / files

DEFECT_VARIANTS = {
    "clean": {},
    "untagged_leaves": {"untagged_leaves": 10},
    "assessment_free_lo": {"assessment_free_lo": True},
    "duplicate_lines": {"duplicate_lines": 25},
    "out_of_order": {"out_of_order": 15},
    "zero_possible": {"zero_possible_sequentials": 3},
}


def plant_defects(spec: CohortSpec) -> dict[str, CohortSpec]:
    """One spec per defect class, plus the clean baseline, sharing the seed."""
    base = {f.name: getattr(spec, f.name) for f in dataclasses.fields(spec)}
    for key in ("untagged_leaves", "duplicate_lines", "out_of_order", "zero_possible_sequentials"):
        base[key] = 0
    base["assessment_free_lo"] = False
    return {name: CohortSpec(**{**base, **overrides}) for name, overrides in DEFECT_VARIANTS.items()}


def _csv_line(values) -> str:
    out = []
    for v in values:
        text = repr(v) if isinstance(v, float) else str(v)
        if any(ch in text for ch in ',"\n\r'):
            text = '"' + text.replace('"', '""') + '"'
        out.append(text)
    return ",".join(out) + "\n"


def _write(path: Path, text: str, manifest: list) -> None:
    data = text.encode("utf-8")
    path.write_bytes(data)
    manifest.append({"path": path.name, "sha256": hashlib.sha256(data).hexdigest()})


def write_fixture(spec: CohortSpec, out_dir: str | Path) -> dict:
    """Generate course + cohort and write every input file plus ground truth.

    Returns the ground-truth mapping (also written to ``ground_truth.json``).
    """
    spec.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    course = gen_course(spec)
    cohort = gen_cohort(spec, course)
    manifest: list[dict] = []

    _write(out / "course.json", json.dumps(course.document, indent=1, sort_keys=True) + "\n", manifest)
    _write(out / "lo_registry.csv",
           "code,group,description,week\n" + "".join(_csv_line(r) for r in course.registry_rows), manifest)
    tag_lines = ["module_id,lo_codes,bloom_level\n"]
    tag_lines += [_csv_line((leaf, ";".join(course.tags[leaf][0]), course.tags[leaf][1]))
                  for leaf in course.leaf_order if leaf in course.tags]
    _write(out / "tags.csv", "".join(tag_lines), manifest)
    _write(out / "week_overrides.csv",
           "chapter_id,week\n" + "".join(_csv_line(kv) for kv in course.week_overrides.items()), manifest)
    _write(out / "exclusions.txt", "".join(f"{s}\n" for s in (STAFF_IDS if spec.staff else ())), manifest)

    event_text = "\n".join(cohort.event_lines) + "\n"
    if spec.compress:
        buf = io.BytesIO()
        with gzip.GzipFile(filename="", mode="wb", fileobj=buf, mtime=0) as gz:
            gz.write(event_text.encode("utf-8"))
        data = buf.getvalue()
        (out / "events.ndjson.gz").write_bytes(data)
        manifest.append({"path": "events.ndjson.gz", "sha256": hashlib.sha256(data).hexdigest()})
        events_name = "events.ndjson.gz"
    else:
        _write(out / "events.ndjson", event_text, manifest)
        events_name = "events.ndjson"

    _write(out / "subsection_grades.csv", "learner_id,sequential_id,earned,possible\n"
           + "".join(_csv_line(r) for r in cohort.subsection_rows), manifest)
    _write(out / "final_grades.csv", "learner_id,grade,certificate\n"
           + "".join(_csv_line(r) for r in cohort.final_rows), manifest)

    truth = dict(cohort.ground_truth)
    truth["leaves"] = len(course.leaf_order)
    truth["tagged_activities"] = len(course.tags)
    truth["lo_count"] = len(course.registry_rows)
    truth["lo_groups"] = len({r[1] for r in course.registry_rows})
    truth["modules"] = len(course.document["modules"])
    truth["graded_sequentials"] = len(course.graded_sequentials)
    _write(out / "ground_truth.json", json.dumps(truth, indent=1, sort_keys=True) + "\n", manifest)

    run_config = (
        f'course = "course.json"\n'
        f'events = "{events_name}"\n'
        f'tags = "tags.csv"\n'
        f'lo_registry = "lo_registry.csv"\n'
        f'grades = "subsection_grades.csv"\n'
        f'final_grades = "final_grades.csv"\n'
        f'week_overrides = "week_overrides.csv"\n'
        f'exclude_learners = "exclusions.txt"\n'
        f"break_seconds = {spec.break_s!r}\n"
        f"pass_threshold = {spec.pass_threshold!r}\n"
        f"seed = {spec.seed}\n"
    )
    _write(out / "run.toml", run_config, manifest)
    manifest.sort(key=lambda m: m["path"])
    (out / "synth_manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n",
                                             encoding="utf-8")
    return truth


def uniform_course_document(chapters: int, sequentials: int, verticals: int, blocks: int,
                            block_types=("video", "html", "problem", "html")) -> tuple[dict, dict[str, int]]:
    """Regular course tree for tests; returns the document and each leaf's week."""
    modules = [dict(id="root", kind="course_root", block_type="other", display_name="Course",
                    parent_id=None, ordinal=0)]
    leaf_week: dict[str, int] = {}
    for c in range(chapters):
        cid = f"ch{c + 1}"
        modules.append(dict(id=cid, kind="chapter", block_type="other", display_name=f"Week {c + 1}",
                            parent_id="root", ordinal=c))
        for s in range(sequentials):
            sid = f"{cid}.s{s + 1}"
            modules.append(dict(id=sid, kind="sequential", block_type="other", display_name=sid,
                                parent_id=cid, ordinal=s))
            for v in range(verticals):
                vid = f"{sid}.v{v + 1}"
                modules.append(dict(id=vid, kind="vertical", block_type="other", display_name=vid,
                                    parent_id=sid, ordinal=v))
                for b in range(blocks):
                    bid = f"{vid}.b{b + 1}"
                    modules.append(dict(id=bid, kind="block",
                                        block_type=block_types[b % len(block_types)],
                                        display_name=bid, parent_id=vid, ordinal=b))
                    leaf_week[bid] = c + 1
    return {"course_id": "course-v1:test", "title": "Test course", "modules": modules}, leaf_week
