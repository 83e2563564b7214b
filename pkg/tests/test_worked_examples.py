"""Small worked cases with hand-computed or fixture-counted answers."""

from __future__ import annotations

import json
import random
import xml.etree.ElementTree as ET

import pytest

from lo_analytics import analytics
from lo_analytics.course_model import Kind, linearize, parse_course_tree, resolve_event_ref, week_of
from lo_analytics.errors import DegenerateInput, StructuralError
from lo_analytics.events import (Attribution, DwellSegment, attribute, format_timestamp_ms, ingest,
                                 parse_event_line, partition_and_sort, sessionize,
                                 sessionize_partitions)
from lo_analytics.grading import FinalGrade, LoGrade, SubsectionGrade, aggregate_by_lo
from lo_analytics.report.svg import render_bipartite, render_bloom_stack, render_grade_box
from lo_analytics.stats import box_stats, correlate, p_value_two_tailed, pearson
from lo_analytics.synthgen import CohortSpec, gen_cohort, gen_course, uniform_course_document
from lo_analytics.tags import Bloom, load_lo_registry, load_tags

SVG = "{http://www.w3.org/2000/svg}"
T0 = 1_519_898_400_000  # 2018-03-01T10:00:00Z


def _events(*seconds, learner="u1"):
    lines = [json.dumps({"username": learner, "time": format_timestamp_ms(T0 + s * 1000),
                         "event_type": "play_video", "event": {"id": "m"}}) for s in seconds]
    records, _ = ingest(lines)
    return partition_and_sort(records)[0][learner]


# course tree

def test_minimal_tree():
    doc = {"modules": [
        {"id": "r", "kind": "course_root", "parent_id": None},
        {"id": "c", "kind": "chapter", "parent_id": "r"},
        {"id": "s", "kind": "sequential", "parent_id": "c"},
        {"id": "v", "kind": "vertical", "parent_id": "s"},
        {"id": "h", "kind": "block", "parent_id": "v", "block_type": "html"}]}
    tree = parse_course_tree(doc)
    assert len(tree) == 5 and tree.modules["h"].depth == 4
    assert linearize(tree) == ["h"]
    doc["modules"][2]["parent_id"] = "s"
    with pytest.raises(StructuralError):
        parse_course_tree(doc)


def test_six_week_fixture_counts():
    doc, leaf_week = uniform_course_document(6, 3, 2, 4)
    tree = parse_course_tree(doc)
    # 1 root + 6 + 18 + 36 + 144
    assert len(tree) == 205
    assert linearize(tree) == list(leaf_week)
    assert all(week_of(tree, leaf) == week for leaf, week in leaf_week.items())
    assert week_of(tree, linearize(tree)[3 * 2 * 4 * 3]) == 4


def test_suffix_ref_against_brute_scan():
    doc, _ = uniform_course_document(2, 1, 1, 2)
    doc["modules"].append({"id": "block-v1:O+C+R+type@video+block@abc12", "kind": "block",
                           "parent_id": "ch1.s1.v1", "ordinal": 2, "block_type": "video"})
    tree = parse_course_tree(doc)
    ref = "block-v1:X+type@video+block@abc12"
    scan = [m for m in tree.modules if m.endswith("abc12")]
    assert len(scan) == 1 and resolve_event_ref(tree, ref) == scan[0]


# events

def test_schema_example_line():
    line = ('{"username":"u1","time":"2018-03-01T10:00:00Z","event_type":"play_video",'
            '"page":"https://lms/x/block@v1"}')
    rec = parse_event_line(line, 1)
    assert (rec.learner_id, rec.timestamp_ms, rec.event_type) == ("u1", T0, "play_video")
    doc, _ = uniform_course_document(1, 1, 1, 1)
    doc["modules"].append({"id": "v1", "kind": "block", "parent_id": "ch1.s1.v1", "ordinal": 1})
    assert resolve_event_ref(parse_course_tree(doc), rec.module_ref) == "v1"
    assert parse_event_line("", 2).reason == "malformed"
    assert parse_event_line('{"username":"u1","event_type":"x"}', 3).reason == "bad_timestamp"


@pytest.mark.parametrize("times,dwells", [((0,), [0]), ((0, 300, 1200), [300_000, 0, 0]),
                                          ((0, 100, 200), [100_000, 100_000, 0])])
def test_hand_computed_dwell(times, dwells):
    assert [s.dwell_ms for s in sessionize(_events(*times), 600)] == dwells


def test_shuffled_input_gives_identical_output():
    rng = random.Random(10)
    lines = []
    for k in range(10_000):
        who = f"u{rng.randrange(40)}"
        # coarse clock so that many events tie on timestamp
        ts = T0 + rng.randrange(0, 20_000) * 1000
        lines.append(json.dumps({"username": who, "time": format_timestamp_ms(ts),
                                 "event_type": rng.choice(["a", "b"]), "event_source": rng.choice(["browser", "server"]),
                                 "event": {"id": rng.choice(["m1", "m2", "m3"])}}))

    def run(ls):
        parts, dups = partition_and_sort(ingest(ls)[0])
        segs, attr = sessionize_partitions(parts, 600)
        return ([(s.learner_id, s.module_id, s.start_ms, s.dwell_ms) for v in segs.values() for s in v],
                attr.module_ms, dups)

    before = run(lines)
    rng.shuffle(lines)
    assert run(lines) == before


def test_attribution_examples():
    attr = attribute([DwellSegment("u", "m", 0, 60_000), DwellSegment("u", None, 60_000, 60_000)])
    assert attr.module_ms == {("u", "m"): 60_000} and attr.unmapped_ms == {"u": 60_000}


# tags and grades

def test_registry_and_tag_examples(small_tree):
    reg = load_lo_registry("LO2.1,LO2,desc,2\nLO1.1,LO1,a,1\nLO1.2,LO1,b,1\n")
    assert (reg["LO2.1"].group, reg["LO2.1"].week) == ("LO2", 2)
    tagmap, report = load_tags("ch1.s1.v1.b1,LO1.1;LO1.2,2\n", reg, small_tree)
    record = tagmap.get("ch1.s1.v1.b1")
    assert record.lo_codes == ("LO1.1", "LO1.2") and record.bloom is Bloom.UNDERSTAND


def test_full_scale_registry_and_tags(full_fixture):
    fx, _ = full_fixture
    tree = parse_course_tree((fx / "course.json").read_text(encoding="utf-8"))
    reg = load_lo_registry((fx / "lo_registry.csv").read_text(encoding="utf-8"))
    assert len(reg) == 31 and len(reg.groups) == 6
    tagmap, report = load_tags((fx / "tags.csv").read_text(encoding="utf-8"), reg, tree)
    assert len(tagmap) == 983 and report.violations == []


def test_subsection_fixture_count():
    spec = CohortSpec(n_learners=20)
    course = gen_course(spec)
    assert len(course.graded_sequentials) == 18
    assert len(gen_cohort(spec, course).subsection_rows) == 20 * 18


def test_lo_grade_example(small_tree):
    reg = load_lo_registry("LO1.1,LO1,,1\nLO1.2,LO1,,1\n")
    tagmap, _ = load_tags("ch1.s1,LO1.1,2\nch1.s2,LO1.1;LO1.2,2\n", reg, small_tree)
    one = aggregate_by_lo([SubsectionGrade("u1", "ch1.s1", 8, 10)], tagmap, reg, small_tree)
    assert one == [LoGrade("u1", "LO1.1", 8, 10)] and one[0].pct == 0.8
    both = aggregate_by_lo([SubsectionGrade("u1", "ch1.s2", 8, 10)], tagmap, reg, small_tree)
    assert [(g.lo_code, g.earned, g.possible) for g in both] == [("LO1.1", 8, 10), ("LO1.2", 8, 10)]


# statistics

def test_correlation_examples():
    x = [1.0, 2.0, 3.0, 4.0]
    assert pearson(x, x) == pytest.approx(1.0)
    assert pearson(x, [-v for v in x]) == pytest.approx(-1.0)
    y = [1.0, 3.0, 2.0, 5.0]
    # textbook formula: r = (n Sxy - Sx Sy) / sqrt((n Sxx - Sx^2)(n Syy - Sy^2))
    n, sx, sy = 4, sum(x), sum(y)
    sxy = sum(a * b for a, b in zip(x, y))
    sxx, syy = sum(a * a for a in x), sum(b * b for b in y)
    textbook = (n * sxy - sx * sy) / ((n * sxx - sx ** 2) * (n * syy - sy ** 2)) ** 0.5
    assert pearson(x, y) == pytest.approx(textbook, abs=1e-12)
    assert p_value_two_tailed(0.0, 10) == 1.0
    assert p_value_two_tailed(0.56, 930) < 0.01
    with pytest.raises(DegenerateInput):
        correlate([1, 2], [2, 1])


def test_p_value_r03_n20_by_quadrature():
    from scipy import integrate
    import math

    df = 18
    t = 0.3 * math.sqrt(df / (1 - 0.09))
    c = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) / math.sqrt(df * math.pi)
    tail, _ = integrate.quad(lambda u: c * (1 + u * u / df) ** (-(df + 1) / 2), t, math.inf)
    assert p_value_two_tailed(0.3, 20) == pytest.approx(2 * tail, abs=1e-6)


def test_engagement_perfect_fit():
    dwell = {f"u{i}": i * 1000 for i in range(1, 8)}
    finals = [FinalGrade(k, v / 7000, True) for k, v in dwell.items()]
    result, _ = analytics.engagement_performance(dwell, finals)
    assert result.r == pytest.approx(1.0) and result.p == 0.0


def test_box_examples():
    const = box_stats([0.7] * 5)
    assert {const.min, const.q1, const.median, const.q3, const.max,
            const.lower_whisker, const.upper_whisker} == {0.7} and const.outliers == ()
    nine = box_stats(range(1, 10))
    assert (nine.q1, nine.median, nine.q3) == (3, 5, 7)
    assert box_stats([0, 0, 0, 0, 10]).outliers == (10,)


# analytics

def test_lo_dwell_examples(small_tree):
    reg = load_lo_registry("LO1.1,LO1,,1\nLO1.2,LO1,,1\n")
    tagmap, _ = load_tags("ch1.s1.v1.b1,LO1.1,2\nch1.s1.v1.b2,LO1.1;LO1.2,2\n", reg, small_tree)
    rows, _ = analytics.lo_dwell_summary(Attribution({("u", "ch1.s1.v1.b1"): 300_000}), tagmap, reg, small_tree)
    assert (rows[0].total_s, rows[0].mean_s, rows[0].engaged_n) == (300, 300, 1)
    rows, _ = analytics.lo_dwell_summary(Attribution({("u", "ch1.s1.v1.b2"): 300_000}), tagmap, reg, small_tree)
    assert [r.total_s for r in rows] == [300, 300]


def test_constant_grade_box():
    reg = load_lo_registry("LO1.1,LO1,,1\n")
    grades = [LoGrade(f"u{i}", "LO1.1", 5, 5) for i in range(4)]
    boxes, notes = analytics.lo_grade_box(grades, [], reg)
    assert boxes["LO1.1"].median == 1.0 == boxes["LO1.1"].q1 and notes == []


def test_bloom_and_bipartite_examples(small_tree):
    reg = load_lo_registry("LO1.1,LO1,,1\nLO1.2,LO1,,1\nLO1.3,LO1,,1\n")
    text = "".join(f"ch1.s1.v1.b{i},LO1.1,2\n" for i in (1, 2, 3)) + "ch1.s1.v2.b1,LO1.1,2\n"
    tagmap, _ = load_tags(text, reg, small_tree)
    cells, _ = analytics.bloom_distribution(tagmap, small_tree)
    week1 = {c.level: c.pct for c in cells if c.week == 1}
    assert week1[Bloom.UNDERSTAND] == 1.0 and sum(week1.values()) == 1.0
    tagmap, _ = load_tags("ch1.s1.v1.b1,LO1.1,1\n", reg, small_tree)
    edges, _ = analytics.bipartite_edges(small_tree, tagmap)
    assert [(e.group_id, e.lo_code, e.weight) for e in edges] == [("ch1", "LO1.1", 1)]
    tagmap, _ = load_tags("ch1.s1.v1.b1,LO1.1;LO1.2;LO1.3,1\n", reg, small_tree)
    edges, _ = analytics.bipartite_edges(small_tree, tagmap)
    assert [e.weight for e in edges] == [1, 1, 1]


# chart geometry against table values

def _root(svg):
    return ET.fromstring(svg.split("\n", 1)[1])


def test_box_geometry_matches_table():
    rows = [{"segment": "all", "lo_code": "LO1.1", "lo_group": "LO1", "n": "9", "min": "0.1",
             "q1": "0.25", "median": "0.5", "q3": "0.75", "max": "0.95", "lower_whisker": "0.1",
             "upper_whisker": "0.95", "outliers": ""}]
    root = _root(render_grade_box(rows, [("LO1.1", "LO1"), ("LO1.2", "LO1")], ["all"]))
    box = root.find(f".//{SVG}rect[@class='box']")
    top, height = float(box.get("y")), float(box.get("height"))
    plot_bottom, plot_h = 70 + 360, 360
    assert top == pytest.approx(plot_bottom - 0.75 * plot_h, abs=0.01)
    assert height == pytest.approx(0.5 * plot_h, abs=0.01)
    median = root.find(f".//{SVG}line[@class='median']")
    assert float(median.get("y1")) == pytest.approx(plot_bottom - 0.5 * plot_h, abs=0.01)
    footnote = root.find(f".//{SVG}text[@class='footnote']")
    assert "LO1.2" in footnote.text


def test_bipartite_widths_proportional():
    edges = [{"group_id": "c1", "lo_code": "LO1.1", "weight": "4"},
             {"group_id": "c1", "lo_code": "LO1.2", "weight": "2"},
             {"group_id": "c2", "lo_code": "LO1.2", "weight": "1"}]
    groups = [{"group_id": "c1", "label": "Week 1", "week": "1", "activities": "5"},
              {"group_id": "c2", "label": "Week 2", "week": "2", "activities": "1"}]
    root = _root(render_bipartite(edges, groups, [("LO1.1", "LO1"), ("LO1.2", "LO1")]))
    widths = [float(e.get("stroke-width")) for e in root.findall(f".//{SVG}line[@class='edge']")]
    assert widths == [10.0, 5.0, 2.5]
    no_edges = _root(render_bipartite([], groups, [("LO1.1", "LO1")]))
    assert no_edges.findall(f".//{SVG}line[@class='edge']") == []
    assert len(no_edges.findall(f".//{SVG}circle")) == 3


def test_bloom_stack_heights_and_supplemental():
    rows = [{"week": str(w), "level": str(lv), "level_name": "", "count": str(c), "pct": p}
            for w, lv, c, p in [(1, 2, 4, "1.000000"), (0, 1, 1, "0.250000"), (0, 2, 3, "0.750000")]]
    root = _root(render_bloom_stack(rows))
    stacks = root.findall(f".//{SVG}rect[@class='stack']")
    heights = {(s.get("data-week"), s.get("data-level")): float(s.get("height")) for s in stacks}
    assert heights == {("1", "2"): 340.0, ("0", "1"): 85.0, ("0", "2"): 255.0}
    assert root.find(f".//{SVG}line[@class='separator']") is not None


# generator

def test_single_week_generator():
    spec = CohortSpec(weeks=1, activities_total=4, lo_count=1, n_learners=5)
    course = gen_course(spec)
    tree = parse_course_tree(course.document)
    assert len(tree.of_kind(Kind.CHAPTER)) == 1
    assert len(course.leaf_order) == 4 and len(course.tags) == 4


def test_zero_rho_stays_small():
    spec = CohortSpec(planted_rho=0.0, n_learners=1000)
    truth = gen_cohort(spec, gen_course(spec)).ground_truth
    assert abs(truth["realized_r"]) < 0.1
