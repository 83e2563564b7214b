"""A hand-sized input set whose outputs are small enough to keep as golden files."""

from __future__ import annotations

import json

from lo_analytics.events import format_timestamp_ms, parse_timestamp_ms
from lo_analytics.synthgen import uniform_course_document

T0 = parse_timestamp_ms("2018-03-01T09:00:00+00:00")

REGISTRY = """code,group,description,week
LO1.1,LO1,Describe the process chain,1
LO1.2,LO1,Compare materials & <processes>,1
LO2.1,LO2,Design a part for printing,2
LO2.2,LO2,Never taught,2
"""

TAGS = """module_id,lo_codes,bloom_level
ch1.s1.v1.b1,LO1.1,1
ch1.s1.v1.b2,LO1.1;LO1.2,2
ch1.s1.v1.b3,LO1.2,3
ch2.s1.v1.b1,LO2.1,2
ch2.s1.v1.b3,LO2.1,6
"""

# (learner, seconds after T0, module ref)
VISITS = [
    ("ana", 0, "ch1.s1.v1.b1"), ("ana", 120, "ch1.s1.v1.b2"), ("ana", 300, "ch1.s1.v1.b3"),
    ("ana", 1500, "ch2.s1.v1.b1"), ("ana", 1620, "ch2.s1.v1.b2"), ("ana", 1700, "ch2.s1.v1.b3"),
    ("ben", 10, "ch1.s1.v1.b1"), ("ben", 70, "ch1.s1.v1.b3"), ("ben", 95, None),
    ("cy", 50, "ch1.s1.v1.b2"), ("cy", 400, "ch2.s1.v1.b3"), ("cy", 460, "ch2.s1.v1.b3"),
    ("dee", 0, "ch1.s1.v1.b1"), ("dee", 900, "ch1.s1.v1.b2"), ("dee", 1000, "ch2.s1.v1.b1"),
    ("dee", 1090, "ch2.s1.v1.b3"),
]

GRADES = """learner_id,sequential_id,earned,possible
ana,ch1.s1,4,5
ana,ch2.s1,3,4
ben,ch1.s1,2,5
cy,ch1.s1,5,5
cy,ch2.s1,1,4
dee,ch1.s1,1,5
dee,ch2.s1,0,4
dee,ch2.s1,0,0
"""

FINALS = """learner_id,grade,certificate
ana,0.82,earned
ben,0.35,notpassing
cy,0.71,
dee,0.12,
"""


def write_tiny_inputs(root):
    root.mkdir(parents=True, exist_ok=True)
    doc, _ = uniform_course_document(2, 1, 1, 3)
    (root / "course.json").write_text(json.dumps(doc, indent=1), encoding="utf-8")
    (root / "lo_registry.csv").write_text(REGISTRY, encoding="utf-8")
    (root / "tags.csv").write_text(TAGS, encoding="utf-8")
    lines = []
    for learner, sec, ref in VISITS:
        event = {"username": learner, "time": format_timestamp_ms(T0 + sec * 1000),
                 "event_type": "page_view" if ref is None else "play_video", "event_source": "browser",
                 "event": {"id": ref} if ref else {}, "page": "https://lms.example/dashboard"}
        lines.append(json.dumps(event, sort_keys=True))
    (root / "events.ndjson").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (root / "grades.csv").write_text(GRADES, encoding="utf-8")
    (root / "finals.csv").write_text(FINALS, encoding="utf-8")
    (root / "run.toml").write_text(
        'course = "course.json"\nevents = "events.ndjson"\ntags = "tags.csv"\n'
        'lo_registry = "lo_registry.csv"\ngrades = "grades.csv"\nfinal_grades = "finals.csv"\n',
        encoding="utf-8")
    return root / "run.toml"
