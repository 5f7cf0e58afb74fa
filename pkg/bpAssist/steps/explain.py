"""
Step: explain

One short paragraph per breakpoint.  BugSite lines say what the failed test
expected; Affected lines say what to watch and why the line was picked,
keyed by the strongest heuristic reason behind it.  An optional text
provider may reword them; its failures fall back to the templates.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed

from ..errors import BpAssistError
from ..minilang import TestCase, TestVerdict, VerdictStatus, value_text
from ..minilang.nodes import Program, stmt_reads, stmt_writes
from .providers import TextProvider
from .recommender import Breakpoint, BreakpointKind, BreakpointPlan, with_explanations

log = logging.getLogger(__name__)

MAX_CHARS = 280
VALUE_CHARS = 40

# strongest first
REASON_PRIORITY = (
    "var-write", "var-after-write", "branch-entry", "after-construct", "call-site", "function-entry",
)

# reason -> (with watched variables, without)
AFFECTED_TEMPLATES: Dict[str, Tuple[str, str]] = {
    "var-write": (
        "Pause here before {vars} is assigned, then step over to see the value after the "
        "assignment. Test {test} depends on it.",
        "Pause here before this assignment runs, then step over to see its effect. "
        "Test {test} depends on it.",
    ),
    "var-after-write": (
        "This line runs right after {vars} is assigned. Check the new value of {vars} here; "
        "test {test} depends on it.",
        "This line runs right after an assignment. Check the new state here; "
        "test {test} depends on it.",
    ),
    "branch-entry": (
        "Execution enters this block only when the condition above holds. Check whether test "
        "{test} reaches this line and what {vars} hold here.",
        "Execution enters this block only when the condition above holds. Check whether test "
        "{test} reaches this line.",
    ),
    "after-construct": (
        "This line runs once the block above is finished. Look at {vars} here to see the state "
        "test {test} ends up with.",
        "This line runs once the block above is finished. Look at the state test {test} "
        "ends up with here.",
    ),
    "call-site": (
        "The function under suspicion is called here. Check the values of {vars} passed in "
        "during test {test}.",
        "The function under suspicion is called here. Check the arguments passed in during "
        "test {test}.",
    ),
    "function-entry": (
        "This is the first line of {fn}. Stop here to see {vars} as test {test} starts the call.",
        "This is the first line of {fn}. Stop here to see how test {test} starts the call.",
    ),
    "slice": (
        "This line depends on the buggy line or feeds into it. Watch {vars} while test {test} runs.",
        "This line depends on the buggy line or feeds into it. Watch it while test {test} runs.",
    ),
}

# wording that would tell the student to edit an Affected line
AFFECTED_FORBIDDEN = ("change", "fix", "edit", "replace", "rewrite")
BUG_SITE_FORBIDDEN = ("related",)


@dataclass(frozen=True)
class ExplanationContext:
    breakpoint: Breakpoint
    failed_test: TestCase
    variables_in_scope: Tuple[str, ...] = ()
    enclosing_function: str = ""
    student_verdict: Optional[TestVerdict] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "line": self.breakpoint.line,
            "kind": self.breakpoint.kind.value,
            "provenance": list(self.breakpoint.provenance),
            "variables": list(self.variables_in_scope),
            "function": self.enclosing_function,
            "failed_test": self.failed_test.to_json(),
        }


def line_variables(p: Program, line: int) -> Tuple[str, ...]:
    """Names written at ``line`` followed by names read there, without repeats."""
    names: List[str] = []
    stmts = p.statements_at(line)
    for stmt in stmts:
        names += [n for n in stmt_writes(stmt) if n not in names]
    for stmt in stmts:
        names += [n for n in stmt_reads(stmt) if n not in names]
    if not stmts:
        fn = p.enclosing_function(line)
        if fn is not None and fn.header_line == line:
            names = list(fn.params)
    return tuple(names)


def build_contexts(plan: BreakpointPlan, student: Program, failed_test: TestCase,
                   student_verdict: Optional[TestVerdict] = None) -> List[ExplanationContext]:
    out = []
    for bp in plan.breakpoints:
        fn = student.enclosing_function(bp.line)
        out.append(ExplanationContext(bp, failed_test, line_variables(student, bp.line),
                                      fn.name if fn else "", student_verdict))
    return out


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                templates                                 │
# ╰──────────────────────────────────────────────────────────────────────────╯
def _join(names: Sequence[str]) -> str:
    if len(names) <= 1:
        return "".join(names)
    return ", ".join(names[:-1]) + " and " + names[-1]


def _clip(text: str, limit: int) -> str:
    return text if len(text) <= limit else text[: limit - 3] + "..."


def _expected(t: TestCase) -> str:
    if t.expected_value is not None:
        return _clip(value_text(t.expected_value), VALUE_CHARS)
    return "output " + _clip(repr(t.expected_stdout), VALUE_CHARS)


def _actual(t: TestCase, verdict: Optional[TestVerdict]) -> Optional[str]:
    if verdict is None:
        return None
    if verdict.status is VerdictStatus.RUNTIME_ERROR:
        return "a runtime error"
    if verdict.status is VerdictStatus.TIMEOUT:
        return "no result before the step limit"
    if t.expected_value is not None and verdict.actual_value is not None:
        return _clip(value_text(verdict.actual_value), VALUE_CHARS)
    return "output " + _clip(repr(verdict.actual_stdout), VALUE_CHARS)


def dominant_reason(bp: Breakpoint) -> str:
    reasons = bp.reasons
    for reason in REASON_PRIORITY:
        if reason in reasons:
            return reason
    return "slice"


def explain_breakpoint(ctx: ExplanationContext) -> str:
    test = ctx.failed_test
    names = _join(ctx.variables_in_scope)
    if ctx.breakpoint.kind is BreakpointKind.BUG_SITE:
        parts = [f"This line needs to change. Test {test.id} expected {_expected(test)}"]
        actual = _actual(test, ctx.student_verdict)
        parts[0] += f" but got {actual}." if actual else "."
        if names:
            parts.append(f"Inspect {names} here and compare against what the test requires.")
        else:
            parts.append("Compare what this line does against what the test requires.")
        text = " ".join(parts)
    else:
        with_vars, without = AFFECTED_TEMPLATES[dominant_reason(ctx.breakpoint)]
        template = with_vars if names else without
        text = template.format(vars=names, test=test.id, fn=ctx.enclosing_function or "the function")
    return _clip(text, MAX_CHARS)


def _provider_text(provider: TextProvider, ctx: ExplanationContext, fallback: str) -> str:
    payload = dict(ctx.to_json(), template=fallback)
    try:
        text = provider.explain(payload)
    except BpAssistError as exc:
        log.warning("text provider failed for line %d (%s); using template",
                    ctx.breakpoint.line, exc)
        return fallback
    if not text or not text.strip():
        log.warning("text provider returned nothing for line %d; using template", ctx.breakpoint.line)
        return fallback
    return _clip(text.strip(), MAX_CHARS)


def explain_plan(plan: BreakpointPlan, contexts: Sequence[ExplanationContext],
                 provider: Optional[TextProvider] = None, n_jobs: int = 4) -> BreakpointPlan:
    if len(contexts) != len(plan.breakpoints):
        raise ValueError("one explanation context per breakpoint expected")
    templates = [explain_breakpoint(ctx) for ctx in contexts]
    if provider is None or not contexts:
        return with_explanations(plan, templates)
    texts = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_provider_text)(provider, ctx, tpl) for ctx, tpl in zip(contexts, templates)
    )
    return with_explanations(plan, list(texts))
