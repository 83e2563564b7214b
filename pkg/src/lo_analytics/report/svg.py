"""Static SVG renderers for the four report figures.

Inputs are the table rows written by :mod:`.tables` (numeric cells kept as
strings); every value label is copied verbatim from its table cell. Output is
a pure function of the rows, so identical tables give identical bytes.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

from ..tags import lo_sort_key
from .palette import (AXIS_COLOR, BLOOM_COLORS, GRID_COLOR, MODULE_COLOR, SEGMENT_OPACITY,
                      group_color)
from .tables import BLOOM_NAMES

WIDTH = 1200
FONT = 'font-family="Helvetica, Arial, sans-serif"'


def esc(text: object) -> str:
    return escape(str(text), {'"': "&quot;"})


def c(x: float) -> str:
    """Coordinate formatting: two decimals, no negative zero."""
    text = f"{x:.2f}"
    return "0.00" if text == "-0.00" else text


def truncate(label: str, limit: int) -> str:
    return label if len(label) <= limit else label[: limit - 1] + "…"


def label_text(x: float, y: float, label: str, limit: int, anchor: str = "start",
               size: int = 12, cls: str = "label") -> str:
    shown = truncate(label, limit)
    title = f"<title>{esc(label)}</title>" if shown != label else ""
    return (f'<text class="{cls}" x="{c(x)}" y="{c(y)}" text-anchor="{anchor}" font-size="{size}" '
            f'{FONT}>{esc(shown)}{title}</text>')


class Canvas:
    def __init__(self, width: int, height: int, title: str):
        self.width = width
        self.height = height
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
            f'<text class="title" x="{c(width / 2)}" y="32" text-anchor="middle" font-size="20" '
            f'{FONT}>{esc(title)}</text>',
        ]

    def add(self, element: str) -> None:
        self.parts.append(element)

    def note(self, text: str, y: float) -> None:
        self.add(f'<text class="note" x="{c(self.width / 2)}" y="{c(y)}" text-anchor="middle" '
                 f'font-size="14" fill="#777777" {FONT}>{esc(text)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _group_index(groups: Sequence[str]) -> dict[str, int]:
    return {g: i for i, g in enumerate(sorted(set(groups), key=lo_sort_key))}


def _nice_ticks(max_value: float, count: int = 5) -> list[float]:
    if max_value <= 0:
        return [0.0]
    step = max_value / count
    magnitude = 10 ** math.floor(math.log10(step))
    for m in (1, 2, 2.5, 5, 10):
        if m * magnitude >= step:
            step = m * magnitude
            break
    return [i * step for i in range(int(max_value / step) + 1)]


def render_dwell_bar(rows: Sequence[dict], metric: str = "mean_min",
                     title: str = "Engagement time by learning objective") -> str:
    """Horizontal bars, one per LO in code order, coloured by LO group; minutes axis."""
    rows = sorted(rows, key=lambda r: lo_sort_key(r["lo_code"]))
    row_h, top, bottom = 24, 80, 70
    height = top + max(len(rows), 1) * row_h + bottom
    x0, x1 = 170.0, 1050.0
    canvas = Canvas(WIDTH, height, title)
    values = [float(r[metric]) for r in rows]
    vmax = max(values, default=0.0)
    if vmax <= 0:
        canvas.note("No data", top + 20)
        return canvas.render()
    scale = (x1 - x0) / vmax if vmax > 0 else 0.0
    y_axis_bottom = top + len(rows) * row_h
    for tick in _nice_ticks(vmax):
        x = x0 + tick * scale
        if x > x1 + 0.01:
            continue
        canvas.add(f'<line class="grid" x1="{c(x)}" y1="{top - 6}" x2="{c(x)}" y2="{c(y_axis_bottom)}" '
                   f'stroke="{GRID_COLOR}" stroke-width="1"/>')
        canvas.add(f'<text class="tick" x="{c(x)}" y="{c(y_axis_bottom + 18)}" text-anchor="middle" '
                   f'font-size="11" {FONT}>{tick:g}</text>')
    groups = _group_index(r["lo_group"] for r in rows)
    for i, (r, v) in enumerate(zip(rows, values)):
        y = top + i * row_h
        width = v * scale
        color = group_color(groups[r["lo_group"]])
        canvas.add(label_text(x0 - 10, y + row_h / 2 + 4, r["lo_code"], 18, anchor="end"))
        canvas.add(f'<rect class="bar" data-lo="{esc(r["lo_code"])}" data-value="{esc(r[metric])}" '
                   f'x="{c(x0)}" y="{c(y + 3)}" width="{c(width)}" height="{row_h - 6}" fill="{color}">'
                   f'<title>{esc(r["lo_code"])}: {esc(r[metric])} min</title></rect>')
        canvas.add(f'<text class="value" x="{c(x0 + width + 6)}" y="{c(y + row_h / 2 + 4)}" '
                   f'font-size="11" {FONT}>{esc(r[metric])}</text>')
    canvas.add(f'<line class="axis" x1="{c(x0)}" y1="{top - 6}" x2="{c(x0)}" y2="{c(y_axis_bottom)}" '
               f'stroke="{AXIS_COLOR}" stroke-width="1.5"/>')
    label = {"mean_min": "Mean minutes per engaged learner", "total_min": "Total minutes (all learners)",
             "median_min": "Median minutes per engaged learner"}.get(metric, metric)
    canvas.add(f'<text class="axis-label" x="{c((x0 + x1) / 2)}" y="{c(y_axis_bottom + 44)}" '
               f'text-anchor="middle" font-size="13" {FONT}>{esc(label)}</text>')
    return canvas.render()


def render_grade_box(rows: Sequence[dict], los: Sequence[tuple[str, str]],
                     segments: Sequence[str],
                     title: str = "Percentage grades by learning objective") -> str:
    """One box per LO and segment (side by side); y axis 0-100 %.

    ``los`` lists every (code, group) so that LOs without data leave a gap.
    """
    los = sorted(los, key=lambda item: lo_sort_key(item[0]))
    n = max(len(los), 1)
    top, plot_h = 70, 360
    height = top + plot_h + 130 + 6 * len(los)
    x0, x1 = 80.0, 1160.0
    y1 = top + plot_h
    canvas = Canvas(WIDTH, height, title)
    if not los or not rows:
        canvas.note("No data", top + 40)
        return canvas.render()
    by_key = {(r["segment"], r["lo_code"]): r for r in rows}

    def y_of(text: str) -> float:
        return y1 - float(text) * plot_h

    for pct in (0, 25, 50, 75, 100):
        y = y1 - pct / 100 * plot_h
        canvas.add(f'<line class="grid" x1="{c(x0)}" y1="{c(y)}" x2="{c(x1)}" y2="{c(y)}" '
                   f'stroke="{GRID_COLOR}" stroke-width="1"/>')
        canvas.add(f'<text class="tick" x="{c(x0 - 8)}" y="{c(y + 4)}" text-anchor="end" '
                   f'font-size="11" {FONT}>{pct}%</text>')
    groups = _group_index(g for _, g in los)
    slot = (x1 - x0) / n
    seg_w = slot * 0.8 / max(len(segments), 1)
    missing: list[str] = []
    for i, (code, group) in enumerate(los):
        color = group_color(groups[group])
        slot_x = x0 + i * slot + slot * 0.1
        has_any = False
        for j, segment in enumerate(segments):
            r = by_key.get((segment, code))
            if r is None:
                continue
            has_any = True
            bx = slot_x + j * seg_w + seg_w * 0.1
            bw = seg_w * 0.8
            mid = bx + bw / 2
            opacity = SEGMENT_OPACITY.get(segment, "1")
            stats = ", ".join(f"{k}={r[k]}" for k in ("n", "min", "q1", "median", "q3", "max",
                                                       "lower_whisker", "upper_whisker"))
            canvas.add(f'<g class="boxplot" data-lo="{esc(code)}" data-segment="{esc(segment)}">'
                       f'<title>{esc(code)} ({esc(segment)}): {esc(stats)}</title>')
            canvas.add(f'<line class="whisker" x1="{c(mid)}" y1="{c(y_of(r["upper_whisker"]))}" '
                       f'x2="{c(mid)}" y2="{c(y_of(r["lower_whisker"]))}" stroke="{AXIS_COLOR}" '
                       f'stroke-width="1"/>')
            for key in ("upper_whisker", "lower_whisker"):
                canvas.add(f'<line class="cap" x1="{c(bx + bw * 0.25)}" y1="{c(y_of(r[key]))}" '
                           f'x2="{c(bx + bw * 0.75)}" y2="{c(y_of(r[key]))}" stroke="{AXIS_COLOR}" '
                           f'stroke-width="1"/>')
            canvas.add(f'<rect class="box" x="{c(bx)}" y="{c(y_of(r["q3"]))}" width="{c(bw)}" '
                       f'height="{c(y_of(r["q1"]) - y_of(r["q3"]))}" fill="{color}" '
                       f'fill-opacity="{opacity}" stroke="{AXIS_COLOR}" stroke-width="1"/>')
            canvas.add(f'<line class="median" x1="{c(bx)}" y1="{c(y_of(r["median"]))}" '
                       f'x2="{c(bx + bw)}" y2="{c(y_of(r["median"]))}" stroke="#000000" '
                       f'stroke-width="2"/>')
            for value in filter(None, r["outliers"].split(";")):
                canvas.add(f'<circle class="outlier" cx="{c(mid)}" cy="{c(y_of(value))}" r="2.5" '
                           f'fill="none" stroke="{AXIS_COLOR}"><title>{esc(value)}</title></circle>')
            canvas.add("</g>")
        shown = code if has_any else code + " †"
        if not has_any:
            missing.append(code)
        lx, ly = x0 + (i + 0.5) * slot, y1 + 14
        canvas.add(f'<text class="label" x="{c(lx)}" y="{c(ly)}" text-anchor="end" font-size="11" '
                   f'transform="rotate(-60 {c(lx)} {c(ly)})" {FONT}>{esc(shown)}</text>')
    canvas.add(f'<line class="axis" x1="{c(x0)}" y1="{c(top)}" x2="{c(x0)}" y2="{c(y1)}" '
               f'stroke="{AXIS_COLOR}" stroke-width="1.5"/>')
    legend_y = height - 40
    lx = x0
    for segment in segments:
        canvas.add(f'<rect class="legend" x="{c(lx)}" y="{c(legend_y - 10)}" width="14" height="12" '
                   f'fill="{MODULE_COLOR}" fill-opacity="{SEGMENT_OPACITY.get(segment, "1")}"/>')
        canvas.add(f'<text class="legend" x="{c(lx + 20)}" y="{c(legend_y)}" font-size="12" '
                   f'{FONT}>{esc(segment.replace("_", " "))}</text>')
        lx += 130
    if missing:
        canvas.add(f'<text class="footnote" x="{c(x0)}" y="{c(legend_y + 22)}" font-size="11" '
                   f'fill="#777777" {FONT}>† no graded data: {esc(", ".join(missing))}</text>')
    return canvas.render()


def render_bipartite(edges: Sequence[dict], groups: Sequence[dict], los: Sequence[tuple[str, str]],
                     title: str = "Course modules (left) and learning objectives (right)") -> str:
    """Chapters on the left (area ~ activities), LOs on the right, line width ~ weight."""
    los = sorted(los, key=lambda item: lo_sort_key(item[0]))
    rows = max(len(los), len(groups), 1)
    top, spacing = 70, 28
    height = top + rows * spacing + 50
    left_x, right_x = 300.0, 900.0
    canvas = Canvas(WIDTH, height, title)
    if not groups and not los:
        canvas.note("No data", top + 20)
        return canvas.render()
    span = rows * spacing

    def ys(count: int) -> list[float]:
        return [top + (k + 0.5) * span / count for k in range(count)]

    left_y = dict(zip((g["group_id"] for g in groups), ys(len(groups)) if groups else []))
    right_y = dict(zip((code for code, _ in los), ys(len(los)) if los else []))
    lo_weight: dict[str, int] = {}
    for e in edges:
        lo_weight[e["lo_code"]] = lo_weight.get(e["lo_code"], 0) + int(e["weight"])
    max_weight = max((int(e["weight"]) for e in edges), default=0)
    max_act = max((int(g["activities"]) for g in groups), default=0)
    max_lo = max(lo_weight.values(), default=0)
    left_rmax = min(30.0, span / max(len(groups), 1) / 2 - 2)
    right_rmax = min(12.0, span / max(len(los), 1) / 2 - 1)
    group_idx = _group_index(g for _, g in los)
    lo_group = dict(los)

    for e in edges:
        if e["group_id"] not in left_y or e["lo_code"] not in right_y:
            continue
        w = 10.0 * int(e["weight"]) / max_weight
        color = group_color(group_idx.get(lo_group.get(e["lo_code"], ""), 0))
        canvas.add(f'<line class="edge" data-group="{esc(e["group_id"])}" data-lo="{esc(e["lo_code"])}" '
                   f'data-weight="{esc(e["weight"])}" x1="{c(left_x)}" y1="{c(left_y[e["group_id"]])}" '
                   f'x2="{c(right_x)}" y2="{c(right_y[e["lo_code"]])}" stroke="{color}" '
                   f'stroke-opacity="0.45" stroke-width="{c(w)}"><title>{esc(e["weight"])}</title></line>')
    for g in groups:
        act = int(g["activities"])
        r = left_rmax * math.sqrt(act / max_act) if max_act else 0.0
        y = left_y[g["group_id"]]
        canvas.add(f'<circle class="module" data-group="{esc(g["group_id"])}" data-activities="{act}" '
                   f'cx="{c(left_x)}" cy="{c(y)}" r="{c(r)}" fill="{MODULE_COLOR}">'
                   f'<title>{esc(g["label"])}: {act} activities</title></circle>')
        canvas.add(label_text(left_x - left_rmax - 8, y + 4, g["label"], 30, anchor="end"))
        canvas.add(f'<text class="value" x="{c(left_x + left_rmax + 6)}" y="{c(y + 4)}" font-size="10" '
                   f'{FONT}>{act}</text>')
    for code, group in los:
        total = lo_weight.get(code, 0)
        r = right_rmax * math.sqrt(total / max_lo) if max_lo else 0.0
        y = right_y[code]
        color = group_color(group_idx[group])
        canvas.add(f'<circle class="lo" data-lo="{esc(code)}" data-weight="{total}" cx="{c(right_x)}" '
                   f'cy="{c(y)}" r="{c(max(r, 2.0) if total else 2.0)}" fill="{color}">'
                   f'<title>{esc(code)}: {total} tagged activities</title></circle>')
        canvas.add(label_text(right_x + right_rmax + 8, y + 4, code, 24))
    return canvas.render()


def render_bloom_stack(rows: Sequence[dict],
                       title: str = "Cognitive load (revised Bloom's taxonomy) by week") -> str:
    """One 100 % stacked bar per week, supplemental (week 0) set apart on the right."""
    top, plot_h = 70, 340
    y1 = top + plot_h
    height = y1 + 120
    canvas = Canvas(WIDTH, height, title)
    weeks = sorted({int(r["week"]) for r in rows})
    if not weeks:
        canvas.note("No data", top + 40)
        return canvas.render()
    regular = [w for w in weeks if w != 0]
    slots: list[tuple[int, float]] = []
    x0, x1 = 90.0, 1110.0
    n_slots = len(regular) + (1.5 if 0 in weeks else 0)
    slot_w = (x1 - x0) / max(n_slots, 1)
    bar_w = min(90.0, slot_w * 0.6)
    for i, w in enumerate(regular):
        slots.append((w, x0 + (i + 0.5) * slot_w))
    if 0 in weeks:
        slots.append((0, x0 + (len(regular) + 1.0) * slot_w))
        sep = x0 + (len(regular) + 0.25) * slot_w
        canvas.add(f'<line class="separator" x1="{c(sep)}" y1="{c(top)}" x2="{c(sep)}" y2="{c(y1)}" '
                   f'stroke="{GRID_COLOR}" stroke-dasharray="4 4"/>')
    for pct in (0, 25, 50, 75, 100):
        y = y1 - pct / 100 * plot_h
        canvas.add(f'<text class="tick" x="{c(x0 - 10)}" y="{c(y + 4)}" text-anchor="end" '
                   f'font-size="11" {FONT}>{pct}%</text>')
    cells: dict[int, list[dict]] = {}
    for r in rows:
        cells.setdefault(int(r["week"]), []).append(r)
    for week, cx in slots:
        week_rows = sorted(cells[week], key=lambda r: int(r["level"]))
        total = sum(int(r["count"]) for r in week_rows)
        bx = cx - bar_w / 2
        label = "Supplemental" if week == 0 else f"Week {week}"
        if total == 0:
            canvas.add(f'<rect class="empty" data-week="{week}" x="{c(bx)}" y="{c(top)}" width="{c(bar_w)}" '
                       f'height="{plot_h}" fill="none" stroke="{GRID_COLOR}" stroke-dasharray="3 3"/>')
            canvas.add(f'<text class="note" x="{c(cx)}" y="{c(top + plot_h / 2)}" text-anchor="middle" '
                       f'font-size="11" fill="#777777" {FONT}>no data</text>')
        y = float(y1)
        for r in week_rows:
            h = float(r["pct"]) * plot_h
            if int(r["count"]) == 0:
                continue
            y -= h
            level = int(r["level"])
            canvas.add(f'<rect class="stack" data-week="{week}" data-level="{level}" data-pct="{esc(r["pct"])}" '
                       f'x="{c(bx)}" y="{c(y)}" width="{c(bar_w)}" height="{c(h)}" '
                       f'fill="{BLOOM_COLORS[level - 1]}" stroke="#ffffff" stroke-width="0.5">'
                       f'<title>{esc(label)} {esc(r["level_name"])}: count={esc(r["count"])}, '
                       f'pct={esc(r["pct"])}</title></rect>')
        canvas.add(f'<text class="label" x="{c(cx)}" y="{c(y1 + 18)}" text-anchor="middle" font-size="12" '
                   f'{FONT}>{esc(label)}</text>')
        canvas.add(f'<text class="value" x="{c(cx)}" y="{c(y1 + 34)}" text-anchor="middle" font-size="10" '
                   f'fill="#555555" {FONT}>{total}</text>')
    lx = x0
    for level, name in enumerate(BLOOM_NAMES, start=1):
        canvas.add(f'<rect class="legend" x="{c(lx)}" y="{c(height - 40)}" width="14" height="12" '
                   f'fill="{BLOOM_COLORS[level - 1]}" stroke="{AXIS_COLOR}" stroke-width="0.5"/>')
        canvas.add(f'<text class="legend" x="{c(lx + 20)}" y="{c(height - 29)}" font-size="12" '
                   f'{FONT}>{level}. {esc(name)}</text>')
        lx += 150
    return canvas.render()
