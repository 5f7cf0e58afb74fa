"""
Tree-walking interpreter and test runner for MiniLang.

Executing real tests is the ground truth the rest of the pipeline leans
on: repaired candidates are validated here, the corpus gate checks that
every fixed program passes its failed test here, and the execution
classifier used in tests is a thin wrapper around ``run_test``.

Test-suite files are JSON documents::

    { "task_id": "sum",
      "tests": [ { "id": "sum_3", "entry": "sum", "args": [3],
                   "expected_value": 6, "expected_stdout": "..." } ] }
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from ..errors import MiniLangRuntimeError, StepLimitExceeded, SuiteFormatError
from .nodes import (
    Assign, Binary, Block, BoolLit, Call, Expr, ExprStmt, For, If, IntLit, Let,
    Print, Program, Return, Stmt, StrLit, Unary, Var, While,
)

DEFAULT_STEP_LIMIT = 100_000
MAX_CALL_DEPTH = 200
# Python frames spent per MiniLang call, with headroom for nested expressions.
FRAMES_PER_CALL = 40
INT_MIN, INT_MAX = -(2 ** 63), 2 ** 63 - 1


@dataclass(frozen=True)
class Unit:
    def __repr__(self) -> str:
        return "Unit"


UNIT = Unit()

Value = Union[int, bool, str, Unit]


def kind_of(v: Value) -> str:
    if type(v) is bool:
        return "Bool"
    if type(v) is int:
        return "Int"
    if type(v) is str:
        return "Str"
    return "Unit"


def values_equal(a: Value, b: Value) -> bool:
    return kind_of(a) == kind_of(b) and a == b


def value_text(v: Value) -> str:
    """Canonical text used by ``print`` and in reports."""
    k = kind_of(v)
    if k == "Bool":
        return "true" if v else "false"
    if k == "Unit":
        return "()"
    return str(v)


# ---------------------------------------------------------------------------
# test objects
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TestCase:
    __test__ = False

    id: str
    entry: str
    args: Tuple[Value, ...] = ()
    expected_value: Optional[Value] = None
    expected_stdout: Optional[str] = None

    def __post_init__(self) -> None:
        if self.expected_value is None and self.expected_stdout is None:
            raise SuiteFormatError(f"test '{self.id}' has no expectation")

    def to_json(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"id": self.id, "entry": self.entry, "args": list(self.args)}
        if self.expected_value is not None:
            doc["expected_value"] = self.expected_value
        if self.expected_stdout is not None:
            doc["expected_stdout"] = self.expected_stdout
        return doc


class VerdictStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    RUNTIME_ERROR = "runtime-error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class TestVerdict:
    __test__ = False

    test_id: str
    status: VerdictStatus
    actual_value: Optional[Value] = None
    actual_stdout: str = ""
    steps_used: int = 0
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.status is VerdictStatus.PASS


@dataclass(frozen=True)
class Suite:
    task_id: str
    tests: Tuple[TestCase, ...] = field(default_factory=tuple)

    def get(self, test_id: str) -> TestCase:
        for t in self.tests:
            if t.id == test_id:
                return t
        raise SuiteFormatError(f"test '{test_id}' not found in suite '{self.task_id}'")


def _literal(raw: Any, where: str) -> Value:
    if isinstance(raw, bool) or isinstance(raw, str):
        return raw
    if isinstance(raw, int):
        if not INT_MIN <= raw <= INT_MAX:
            raise SuiteFormatError(f"{where}: integer literal out of 64-bit range")
        return raw
    raise SuiteFormatError(f"{where}: unsupported literal {raw!r}")


def testcase_from_json(doc: Dict[str, Any]) -> TestCase:
    try:
        tid = doc["id"]
        entry = doc["entry"]
    except (KeyError, TypeError) as exc:
        raise SuiteFormatError(f"test record missing field {exc}") from None
    args = tuple(_literal(a, f"test '{tid}' args") for a in doc.get("args", []))
    expected = doc.get("expected_value")
    if expected is not None:
        expected = _literal(expected, f"test '{tid}' expected_value")
    return TestCase(tid, entry, args, expected, doc.get("expected_stdout"))


def suite_from_json(doc: Dict[str, Any]) -> Suite:
    if not isinstance(doc, dict) or "tests" not in doc:
        raise SuiteFormatError("suite document needs 'task_id' and 'tests'")
    tests = tuple(testcase_from_json(t) for t in doc["tests"])
    ids = [t.id for t in tests]
    if len(set(ids)) != len(ids):
        raise SuiteFormatError("test ids must be unique within a suite")
    return Suite(str(doc.get("task_id", "")), tests)


def load_suite(path: Path) -> Suite:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SuiteFormatError(f"{path}: {exc}") from None
    return suite_from_json(doc)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------
@dataclass
class _Returned:
    value: Value


def _ensure_recursion_limit(limit: int) -> None:
    # only ever raised, so concurrent runs never shrink each other's headroom
    if sys.getrecursionlimit() < limit:
        sys.setrecursionlimit(limit)


class Interpreter:
    """Big-step evaluator; one instance per run, no shared state."""

    def __init__(self, program: Program, step_limit: int = DEFAULT_STEP_LIMIT) -> None:
        self.functions = {fn.name: fn for fn in program.functions}
        self.step_limit = step_limit
        self.steps = 0
        self.stdout: List[str] = []
        self.depth = 0
        _ensure_recursion_limit(MAX_CALL_DEPTH * FRAMES_PER_CALL + 1_000)

    def step(self) -> None:
        self.steps += 1
        if self.steps > self.step_limit:
            raise StepLimitExceeded(self.step_limit)

    # -------------------------------------------------------------- calls
    def call(self, name: str, args: Sequence[Value], line: Optional[int]) -> Value:
        fn = self.functions.get(name)
        if fn is None:
            raise MiniLangRuntimeError(line, f"unknown function '{name}'")
        if len(args) != len(fn.params):
            raise MiniLangRuntimeError(
                line, f"'{name}' expects {len(fn.params)} argument(s), got {len(args)}")
        if self.depth >= MAX_CALL_DEPTH:
            raise MiniLangRuntimeError(line, "call depth exceeded")
        env: Dict[str, Value] = dict(zip(fn.params, args))
        self.depth += 1
        try:
            result = self.block(fn.body, env)
        except RecursionError:
            raise MiniLangRuntimeError(line, "call depth exceeded") from None
        finally:
            self.depth -= 1
        return result.value if result is not None else UNIT

    # --------------------------------------------------------- statements
    def block(self, block: Block, env: Dict[str, Value]) -> Optional[_Returned]:
        for stmt in block:
            result = self.statement(stmt, env)
            if result is not None:
                return result
        return None

    def statement(self, stmt: Stmt, env: Dict[str, Value]) -> Optional[_Returned]:
        self.step()
        if isinstance(stmt, Let):
            env[stmt.name] = self.eval(stmt.expr, env)
        elif isinstance(stmt, Assign):
            if stmt.name not in env:
                raise MiniLangRuntimeError(stmt.line, f"unbound variable '{stmt.name}'")
            env[stmt.name] = self.eval(stmt.expr, env)
        elif isinstance(stmt, If):
            if self.condition(stmt.cond, env, stmt.line):
                return self.block(stmt.then, env)
            if stmt.orelse:
                return self.block(stmt.orelse, env)
        elif isinstance(stmt, While):
            first = True
            while True:
                if not first:
                    self.step()
                first = False
                if not self.condition(stmt.cond, env, stmt.line):
                    break
                result = self.block(stmt.body, env)
                if result is not None:
                    return result
        elif isinstance(stmt, For):
            lo = self.expect_int(self.eval(stmt.start, env), stmt.line)
            hi = self.expect_int(self.eval(stmt.stop, env), stmt.line)
            current = lo
            while current <= hi:
                env[stmt.var] = current
                result = self.block(stmt.body, env)
                if result is not None:
                    return result
                current += 1
                self.step()
        elif isinstance(stmt, Return):
            return _Returned(self.eval(stmt.expr, env))
        elif isinstance(stmt, Print):
            self.stdout.append(value_text(self.eval(stmt.expr, env)) + "\n")
        else:
            self.eval(stmt.call, env)
        return None

    def condition(self, expr: Expr, env: Dict[str, Value], line: int) -> bool:
        value = self.eval(expr, env)
        if kind_of(value) != "Bool":
            raise MiniLangRuntimeError(line, f"condition must be Bool, got {kind_of(value)}")
        return bool(value)

    # -------------------------------------------------------- expressions
    @staticmethod
    def expect_int(value: Value, line: int) -> int:
        if kind_of(value) != "Int":
            raise MiniLangRuntimeError(line, f"type mismatch: expected Int, got {kind_of(value)}")
        return value  # type: ignore[return-value]

    @staticmethod
    def checked(value: int, line: int) -> int:
        if not INT_MIN <= value <= INT_MAX:
            raise MiniLangRuntimeError(line, "integer overflow")
        return value

    def eval(self, expr: Expr, env: Dict[str, Value]) -> Value:
        if isinstance(expr, (IntLit, BoolLit, StrLit)):
            return expr.value
        if isinstance(expr, Var):
            if expr.name not in env:
                raise MiniLangRuntimeError(expr.line, f"unbound variable '{expr.name}'")
            return env[expr.name]
        if isinstance(expr, Call):
            args = [self.eval(a, env) for a in expr.args]
            return self.call(expr.name, args, expr.line)
        if isinstance(expr, Unary):
            value = self.eval(expr.operand, env)
            if expr.op == "!":
                if kind_of(value) != "Bool":
                    raise MiniLangRuntimeError(expr.line, "type mismatch: '!' needs Bool")
                return not value
            return self.checked(-self.expect_int(value, expr.line), expr.line)
        return self.binary(expr, env)

    def binary(self, expr: Binary, env: Dict[str, Value]) -> Value:
        op, line = expr.op, expr.line
        if op in ("&&", "||"):
            left = self.eval(expr.left, env)
            if kind_of(left) != "Bool":
                raise MiniLangRuntimeError(line, f"type mismatch: '{op}' needs Bool")
            if (op == "&&" and not left) or (op == "||" and left):
                return left
            right = self.eval(expr.right, env)
            if kind_of(right) != "Bool":
                raise MiniLangRuntimeError(line, f"type mismatch: '{op}' needs Bool")
            return right
        left = self.eval(expr.left, env)
        right = self.eval(expr.right, env)
        if op in ("==", "!="):
            if kind_of(left) != kind_of(right):
                raise MiniLangRuntimeError(
                    line, f"type mismatch: cannot compare {kind_of(left)} with {kind_of(right)}")
            return (left == right) if op == "==" else (left != right)
        a = self.expect_int(left, line)
        b = self.expect_int(right, line)
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        if op == "+":
            return self.checked(a + b, line)
        if op == "-":
            return self.checked(a - b, line)
        if op == "*":
            return self.checked(a * b, line)
        if b == 0:
            raise MiniLangRuntimeError(line, "division by zero" if op == "/" else "modulo by zero")
        # truncating division, remainder takes the dividend's sign
        q = abs(a) // abs(b)
        if (a >= 0) != (b > 0):
            q = -q
        if op == "/":
            return self.checked(q, line)
        return a - b * q


def run_call(p: Program, entry: str, args: Sequence[Value],
             step_limit: int = DEFAULT_STEP_LIMIT) -> Tuple[Value, str, int]:
    """Evaluate ``entry(*args)``; returns (value, stdout, steps)."""
    interp = Interpreter(p, step_limit)
    value = interp.call(entry, list(args), None)
    return value, "".join(interp.stdout), interp.steps


def run_test(p: Program, t: TestCase, step_limit: int = DEFAULT_STEP_LIMIT) -> TestVerdict:
    interp = Interpreter(p, step_limit)
    try:
        value = interp.call(t.entry, list(t.args), None)
    except MiniLangRuntimeError as exc:
        return TestVerdict(t.id, VerdictStatus.RUNTIME_ERROR, None, "".join(interp.stdout),
                           interp.steps, str(exc))
    except StepLimitExceeded as exc:
        return TestVerdict(t.id, VerdictStatus.TIMEOUT, None, "".join(interp.stdout),
                           interp.steps, str(exc))
    stdout = "".join(interp.stdout)
    ok = True
    if t.expected_value is not None and not values_equal(value, t.expected_value):
        ok = False
    if t.expected_stdout is not None and stdout != t.expected_stdout:
        ok = False
    status = VerdictStatus.PASS if ok else VerdictStatus.FAIL
    return TestVerdict(t.id, status, value, stdout, interp.steps)


def run_suite(p: Program, suite: Union[Suite, Sequence[TestCase]],
              step_limit: int = DEFAULT_STEP_LIMIT) -> List[TestVerdict]:
    tests = suite.tests if isinstance(suite, Suite) else tuple(suite)
    ids = [t.id for t in tests]
    if len(set(ids)) != len(ids):
        raise SuiteFormatError("test ids must be unique within a suite")
    return [run_test(p, t, step_limit) for t in tests]
