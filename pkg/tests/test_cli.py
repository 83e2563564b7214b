from __future__ import annotations

import json

import pytest

from lo_analytics.cli import main
from lo_analytics.config import build_config, dump_config, load_config_file

from tiny_inputs import write_tiny_inputs


@pytest.fixture
def tiny(tmp_path):
    return write_tiny_inputs(tmp_path / "inputs")


def test_flags_override_config_file(tiny, tmp_path):
    values = load_config_file(tiny)
    assert values["course"] == str(tiny.parent / "course.json")
    config = build_config(values, {"break_seconds": 300, "segments": None, "out": str(tmp_path / "o")})
    assert config.break_seconds == 300.0 and config.course.endswith("course.json")
    with pytest.raises(ValueError):
        build_config(values, {"pass_threshold": 1.5})
    with pytest.raises(ValueError):
        build_config({"bogus": 1})


def test_config_used_roundtrips(tiny, tmp_path):
    out = tmp_path / "out"
    assert main(["analyze", "--config", str(tiny), "--out", str(out), "--break-seconds", "300",
                 "--segments", "all,passed"]) == 0
    again = build_config(load_config_file(out / "config_used.toml"), {"out": str(out)})
    assert again.break_seconds == 300.0
    assert again.segments == ("all", "passed")
    assert dump_config(again, out) == (out / "config_used.toml").read_text(encoding="utf-8")


def test_validate_exit_codes(tiny, tmp_path, capsys):
    # the tiny course has an untagged leaf and two LO gaps
    assert main(["validate", "--config", str(tiny), "--out", str(tmp_path / "v")]) == 1
    assert "untagged leaf: ch2.s1.v1.b2" in capsys.readouterr().out
    diag = json.loads((tmp_path / "v" / "diagnostics.json").read_text())
    assert diag["findings"] == 3
    assert main(["validate", "--config", str(tiny), "--course", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "v")]) == 2


def test_analyze_bad_course_is_fatal(tiny, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"modules": [{"id": "a", "kind": "chapter", "parent_id": "zz"}]}')
    assert main(["analyze", "--config", str(tiny), "--course", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_empty_event_log(tiny, tmp_path, caplog):
    empty = tmp_path / "empty.ndjson"
    empty.write_text("")
    out = tmp_path / "o"
    assert main(["all", "--config", str(tiny), "--events", str(empty), "--out", str(out)]) == 0
    lines = (out / "lo_dwell.csv").read_text().splitlines()
    assert all(line.split(",")[5] == "0" for line in lines[1:])
    assert "No data" in (out / "charts" / "fig1_dwell_by_lo.svg").read_text()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["cohort_size"] == 0 and summary["r"] is None


def test_report_without_tables(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == 2


def test_synth_prints_r_and_manifest(tmp_path, capsys):
    out = tmp_path / "fx"
    assert main(["synth", "--out", str(out), "--n-learners", "30", "--activities", "80",
                 "--lo-count", "12", "--seed", "3"]) == 0
    printed = capsys.readouterr().out.splitlines()
    truth = json.loads((out / "ground_truth.json").read_text())
    assert printed[0] == f"realized_r = {truth['realized_r']!r}"
    assert any(line.endswith("  events.ndjson") for line in printed)
    assert main(["synth", "--out", str(out), "--planted-rho", "2"]) == 1


def test_synth_spec_file_and_compressed_events(tmp_path):
    spec = tmp_path / "spec.toml"
    spec.write_text("n_learners = 20\nactivities_total = 60\nlo_count = 8\nseed = 11\ncompress = true\n")
    out = tmp_path / "fx"
    assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 0
    assert (out / "events.ndjson.gz").is_file()
    assert main(["all", "--config", str(out / "run.toml"), "--out", str(tmp_path / "o")]) == 0
    corr = json.loads((tmp_path / "o" / "correlation.json").read_text())
    truth = json.loads((out / "ground_truth.json").read_text())
    assert abs(float(corr["r_full"]) - truth["realized_r"]) < 1e-9


def test_spearman_flag(tiny, tmp_path):
    out = tmp_path / "o"
    assert main(["analyze", "--config", str(tiny), "--out", str(out), "--spearman"]) == 0
    corr = json.loads((out / "correlation.json").read_text())
    # ranks of dwell (ana, ben, cy, dee) = 4,1,3,2 and of grade = 4,2,3,1
    assert corr["method"] == "spearman" and corr["r"] == 0.8
