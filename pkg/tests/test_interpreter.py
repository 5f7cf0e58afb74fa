from __future__ import annotations

import json

import pytest

from bpAssist.errors import MiniLangRuntimeError, SuiteFormatError
from bpAssist.minilang import (
    UNIT, Suite, TestCase, VerdictStatus, load_suite, parse, run_call, run_suite, run_test,
    suite_from_json,
)
from bpAssist.minilang.interpreter import MAX_CALL_DEPTH

from .conftest import corpus_pairs


def test_run_call_fixed_sum(fix):
    value, stdout, steps = run_call(fix, "sum", [3], 10_000)
    assert value == 6
    assert stdout == ""
    assert steps <= 20


def test_run_call_student_sum(stu):
    value, _, _ = run_call(stu, "sum", [3], 10_000)
    assert value == 3


def test_run_test_verdicts(stu, fix, sum_3):
    bad = run_test(stu, sum_3)
    assert bad.status is VerdictStatus.FAIL
    assert bad.actual_value == 3
    assert run_test(fix, sum_3).passed


def test_run_suite(stu, fix):
    tests = [TestCase("sum_3", "sum", (3,), 6), TestCase("sum_1", "sum", (1,), 1)]
    assert [v.status for v in run_suite(fix, tests)] == [VerdictStatus.PASS, VerdictStatus.PASS]
    assert [v.status for v in run_suite(stu, tests)] == [VerdictStatus.FAIL, VerdictStatus.FAIL]


def test_run_suite_rejects_duplicate_ids(fix):
    tests = [TestCase("t", "sum", (3,), 6), TestCase("t", "sum", (1,), 1)]
    with pytest.raises(SuiteFormatError):
        run_suite(fix, tests)


def test_division_by_zero_is_runtime_error():
    p = parse("fun f(x) {\n  return 10 / x;\n}\n")
    verdict = run_test(p, TestCase("zero", "f", (0,), 1))
    assert verdict.status is VerdictStatus.RUNTIME_ERROR
    assert "division by zero" in verdict.error


def test_truncating_division():
    p = parse("fun q(a, b) {\n  return a / b;\n}\nfun r(a, b) {\n  return a % b;\n}\n")
    assert run_call(p, "q", [-7, 2])[0] == -3
    assert run_call(p, "r", [-7, 2])[0] == -1
    assert run_call(p, "r", [7, -2])[0] == 1


def test_step_limit_gives_timeout():
    p = parse("fun spin() {\n  while (true) {\n  }\n}\n")
    verdict = run_test(p, TestCase("spin", "spin", (), 0), step_limit=1_000)
    assert verdict.status is VerdictStatus.TIMEOUT


def test_type_mismatch():
    p = parse("fun f() {\n  return 1 + true;\n}\n")
    with pytest.raises(MiniLangRuntimeError, match="line 2"):
        run_call(p, "f", [])


def test_mixed_kind_equality_is_an_error():
    p = parse('fun f() {\n  return 1 == "1";\n}\n')
    with pytest.raises(MiniLangRuntimeError, match="cannot compare"):
        run_call(p, "f", [])


def test_short_circuit():
    p = parse("fun f(x) {\n  return x == 0 || 10 / x > 1;\n}\n")
    assert run_call(p, "f", [0])[0] is True


def test_print_and_unit_return():
    p = parse('fun hello(n) {\n  for (k in 1..n) {\n    print(k);\n  }\n  print("done");\n}\n')
    value, stdout, _ = run_call(p, "hello", [2])
    assert value == UNIT
    assert stdout == "1\n2\ndone\n"
    assert run_test(p, TestCase("h", "hello", (2,), expected_stdout="1\n2\ndone\n")).passed


def test_bool_and_int_expectations_differ():
    p = parse("fun one() {\n  return 1;\n}\n")
    assert not run_test(p, TestCase("b", "one", (), True)).passed


def test_arity_mismatch():
    p = parse("fun f(a) {\n  return a;\n}\n")
    verdict = run_test(p, TestCase("arity", "f", (1, 2), 1))
    assert verdict.status is VerdictStatus.RUNTIME_ERROR


def test_suite_from_json_and_lookup():
    suite = suite_from_json({"task_id": "sum", "tests": [
        {"id": "sum_3", "entry": "sum", "args": [3], "expected_value": 6},
    ]})
    assert suite.get("sum_3").args == (3,)
    with pytest.raises(SuiteFormatError, match="not found"):
        suite.get("sum_9")


def test_test_needs_an_expectation():
    with pytest.raises(SuiteFormatError):
        suite_from_json({"task_id": "t", "tests": [{"id": "x", "entry": "f", "args": []}]})


def test_load_suite_round_trip(tmp_path, sum_suite):
    path = tmp_path / "tests.json"
    path.write_text(json.dumps({"task_id": sum_suite.task_id,
                                "tests": [t.to_json() for t in sum_suite.tests]}))
    assert load_suite(path) == sum_suite


def test_load_suite_bad_json(tmp_path):
    path = tmp_path / "tests.json"
    path.write_text("{not json")
    with pytest.raises(SuiteFormatError):
        load_suite(path)


def test_suite_is_a_value():
    assert Suite("t", ()) == Suite("t", ())


COUNT_DOWN = "fun f(n) {\n  if (n > 0) {\n    return f(n - 1) + 1;\n  }\n  return 0;\n}\n"


def test_recursion_up_to_the_depth_limit():
    # f(n) makes n + 1 nested calls
    depth = MAX_CALL_DEPTH - 1
    verdict = run_test(parse(COUNT_DOWN), TestCase("t", "f", (depth,), depth))
    assert verdict.status is VerdictStatus.PASS


def test_recursion_past_the_depth_limit_is_runtime_error():
    verdict = run_test(parse(COUNT_DOWN), TestCase("t", "f", (MAX_CALL_DEPTH + 1,), MAX_CALL_DEPTH + 1))
    assert verdict.status is VerdictStatus.RUNTIME_ERROR
    assert "call depth exceeded" in verdict.error


@pytest.mark.parametrize("pair_dir", corpus_pairs(), ids=lambda p: p.name)
def test_verdicts_do_not_change_with_a_larger_step_limit(pair_dir):
    suite = load_suite(pair_dir / "tests.json")
    for name in ("student.ml", "fixed.ml"):
        p = parse((pair_dir / name).read_text())
        for verdict in run_suite(p, suite):
            if verdict.status is VerdictStatus.TIMEOUT:
                continue
            test = next(t for t in suite.tests if t.id == verdict.test_id)
            for limit in (verdict.steps_used, verdict.steps_used + 1, verdict.steps_used * 10 + 10):
                assert run_test(p, test, step_limit=limit) == verdict, (name, test.id, limit)
