from __future__ import annotations

import json

import pytest

from lo_analytics.course_model import parse_course_tree
from lo_analytics.synthgen import CohortSpec, uniform_course_document, write_fixture


@pytest.fixture
def small_doc():
    doc, _ = uniform_course_document(2, 2, 2, 3)
    return doc


@pytest.fixture
def small_tree(small_doc):
    return parse_course_tree(small_doc)


def small_spec(**overrides) -> CohortSpec:
    base = dict(n_learners=40, activities_total=120, lo_count=12, events_per_learner=30, seed=7)
    base.update(overrides)
    return CohortSpec(**base)


@pytest.fixture(scope="session")
def small_fixture(tmp_path_factory):
    out = tmp_path_factory.mktemp("small_fixture")
    truth = write_fixture(small_spec(), out)
    return out, truth


@pytest.fixture(scope="session")
def full_fixture(tmp_path_factory):
    out = tmp_path_factory.mktemp("full_fixture")
    truth = write_fixture(CohortSpec(), out)
    return out, truth


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
