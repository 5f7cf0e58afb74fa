from __future__ import annotations

import json

import pytest

from bpAssist.config import RecommenderConfig
from bpAssist.errors import FixDoesNotPass
from bpAssist.minilang import load_suite, parse
from bpAssist.steps.recommender import BreakpointKind, analyze, recommend, with_explanations

from .conftest import CORPUS, corpus_pairs


def load_pair(pair_dir):
    student = parse((pair_dir / "student.ml").read_text())
    fixed = parse((pair_dir / "fixed.ml").read_text())
    suite = load_suite(pair_dir / "tests.json")
    test = suite.get((pair_dir / "failed_test.txt").read_text().strip())
    return student, fixed, suite, test


def summary(plan):
    return [(bp.line, bp.kind.value, bp.provenance) for bp in plan.breakpoints]


def test_reference_plan(stu, fix, sum_3):
    plan = recommend(stu, fix, sum_3, task_id="sum")
    assert summary(plan) == [
        (4, "BugSite", ("diff",)),
        (3, "Affected", ("H2:var-write", "slice")),
        (5, "Affected", ("H1:branch-entry", "slice")),
        (6, "Affected", ("H2:var-write", "slice")),
        (8, "Affected", ("H1:after-construct", "H2:var-after-write", "slice")),
    ]
    assert plan.lines == [4, 3, 5, 6, 8]


def test_reference_plan_json_is_stable(stu, fix, sum_3):
    first = recommend(stu, fix, sum_3, task_id="sum").dumps()
    bundled = parse((CORPUS / "pair-01" / "student.ml").read_text())
    second = recommend(bundled, fix, sum_3, task_id="sum").dumps()
    assert first == second
    doc = json.loads(first)
    assert list(doc) == ["task_id", "failed_test_id", "breakpoints"]
    assert doc["breakpoints"][0] == {
        "line": 4, "kind": "BugSite", "provenance": ["diff"], "explanation": None,
    }


def test_truncation_prefers_forward_distance(stu, fix, sum_3):
    plan = recommend(stu, fix, sum_3, RecommenderConfig(max_breakpoints=2))
    assert plan.lines == [4, 5]
    assert recommend(stu, fix, sum_3, RecommenderConfig(max_breakpoints=0)).breakpoints == ()


def test_without_after_construct_line(stu, fix, sum_3):
    plan = recommend(stu, fix, sum_3, RecommenderConfig(h1_include_exit=False))
    by_line = {bp.line: bp for bp in plan.breakpoints}
    assert by_line[8].provenance == ("H2:var-after-write", "slice")


def test_identical_programs_give_empty_plan(fix, sum_3):
    rec = analyze(fix, fix, sum_3)
    assert rec.plan.breakpoints == ()
    assert rec.sites == ()


def test_fixed_program_must_pass(stu, sum_3):
    with pytest.raises(FixDoesNotPass):
        recommend(stu, stu, sum_3)


def test_spot_check_pair_02():
    student, fixed, suite, test = load_pair(CORPUS / "pair-02")
    plan = recommend(student, fixed, test, task_id=suite.task_id)
    assert summary(plan) == [
        (6, "BugSite", ("diff",)),
        (7, "Affected", ("H1:branch-entry", "slice")),
        (9, "Affected", ("H1:after-construct", "slice")),
    ]


def test_spot_check_pair_03():
    student, fixed, suite, test = load_pair(CORPUS / "pair-03")
    plan = recommend(student, fixed, test, task_id=suite.task_id)
    assert summary(plan) == [
        (2, "BugSite", ("diff",)),
        (4, "Affected", ("H2:var-write", "slice")),
        (6, "Affected", ("H2:var-after-write", "slice")),
    ]


@pytest.mark.parametrize("pair_dir", corpus_pairs(), ids=lambda p: p.name)
def test_plans_respect_the_intersection_law(pair_dir):
    student, fixed, suite, test = load_pair(pair_dir)
    rec = analyze(student, fixed, test, task_id=suite.task_id)
    anchors = {s.anchor_line for s in rec.sites}
    assert rec.plan.breakpoints, "non-empty diff must give a non-empty plan"
    for bp in rec.plan.breakpoints:
        if bp.kind is BreakpointKind.BUG_SITE:
            assert bp.line in anchors
        else:
            assert bp.line in rec.region
            assert bp.line in rec.pool.lines
            assert bp.line not in anchors
            assert "slice" in bp.provenance
    assert len(rec.plan.breakpoints) <= 10
    assert len(set(rec.plan.lines)) == len(rec.plan.lines)


def test_with_explanations(stu, fix, sum_3):
    plan = recommend(stu, fix, sum_3)
    texts = [f"note {bp.line}" for bp in plan.breakpoints]
    explained = with_explanations(plan, texts)
    assert [bp.explanation for bp in explained.breakpoints] == texts
    assert explained.lines == plan.lines
