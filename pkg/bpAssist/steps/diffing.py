"""
Step: diffing

Inputs:
  student and fixed ``Program`` objects.

Outputs:
  list[DiffHunk]    LCS diff over canonical, token-normalized rows.
  list[ChangeSite]  each hunk anchored on student lines and classified into
                    the edit kinds that trigger the breakpoint heuristics.

Both programs are re-printed canonically before comparison, so layout and
comments never show up as changes.  Closing-brace rows take part in the LCS
but carry no line; a hunk made only of braces is dropped.
"""

# ────────────────────────────── standard library ─────────────────────────────
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, List, Optional, Sequence, Set, Tuple

# ──────────────────────────────── 3rd‑party ──────────────────────────────────
import numpy as np

# ──────────────────────────────── local ──────────────────────────────────────
from ..errors import EmptyDiff
from ..minilang.nodes import (
    Assign, Binary, ExprStmt, For, If, Let, Print, Program, Return, Stmt,
    While, expr_vars, iter_exprs, own_exprs,
)
from ..minilang.printer import Row, render_rows

log = logging.getLogger(__name__)


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                  LCS                                     │
# ╰──────────────────────────────────────────────────────────────────────────╯
def normalize_row(row: Row) -> str:
    return " ".join(row.text.split())


def lcs_pairs(a: Sequence[str], b: Sequence[str]) -> List[Tuple[int, int]]:
    """Index pairs of one longest common subsequence of ``a`` and ``b``."""
    m, n = len(a), len(b)
    table = np.zeros((m + 1, n + 1), dtype=np.int32)
    for i in range(m - 1, -1, -1):
        for j in range(n - 1, -1, -1):
            if a[i] == b[j]:
                table[i, j] = table[i + 1, j + 1] + 1
            else:
                table[i, j] = max(table[i + 1, j], table[i, j + 1])
    pairs: List[Tuple[int, int]] = []
    i = j = 0
    while i < m and j < n:
        if a[i] == b[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif table[i + 1, j] >= table[i, j + 1]:
            i += 1
        else:
            j += 1
    return pairs


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                 hunks                                    │
# ╰──────────────────────────────────────────────────────────────────────────╯
class HunkKind(str, Enum):
    REPLACE = "replace"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class DiffHunk:
    kind: HunkKind
    student_lines: Tuple[int, ...]
    fixed_lines: Tuple[int, ...]
    # nearest unchanged student row before the hunk, as (line, role)
    preceding: Optional[Tuple[int, str]] = None


def _origins(rows: Sequence[Row]) -> Tuple[int, ...]:
    return tuple(sorted({r.origin for r in rows if r.origin is not None}))


def _make_hunk(s_rows: List[Row], f_rows: List[Row], s_before: List[Row]) -> Optional[DiffHunk]:
    s_lines, f_lines = _origins(s_rows), _origins(f_rows)
    if not s_lines and not f_lines:
        return None
    if not s_lines:
        kind = HunkKind.INSERT
    elif not f_lines:
        kind = HunkKind.DELETE
    else:
        kind = HunkKind.REPLACE
    preceding = None
    for row in reversed(s_before):
        if row.origin is not None:
            preceding = (row.origin, row.role)
            break
    return DiffHunk(kind, s_lines, f_lines, preceding)


def diff_lines(student: Program, fixed: Program) -> List[DiffHunk]:
    s_rows, f_rows = render_rows(student), render_rows(fixed)
    pairs = lcs_pairs([normalize_row(r) for r in s_rows], [normalize_row(r) for r in f_rows])
    pairs.append((len(s_rows), len(f_rows)))  # sentinel

    hunks: List[DiffHunk] = []
    unchanged: List[Row] = []
    i = j = 0
    for pi, pj in pairs:
        if pi > i or pj > j:
            hunk = _make_hunk(s_rows[i:pi], f_rows[j:pj], unchanged)
            if hunk is not None:
                hunks.append(hunk)
        if pi < len(s_rows):
            unchanged.append(s_rows[pi])
        i, j = pi + 1, pj + 1
    log.debug("diff: %d hunk(s)", len(hunks))
    return hunks


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                            classification                                │
# ╰──────────────────────────────────────────────────────────────────────────╯
class EditTag(str, Enum):
    CONDITION_CHANGE = "ConditionChange"
    VARIABLE_MODIFICATION = "VariableModification"
    FUNCTION_SCOPE_CHANGE = "FunctionScopeChange"


@dataclass(frozen=True, order=True)
class EditKind:
    tag: EditTag
    name: Optional[str] = None  # variable or function, None for conditions

    @classmethod
    def condition(cls) -> "EditKind":
        return cls(EditTag.CONDITION_CHANGE)

    @classmethod
    def variable(cls, name: str) -> "EditKind":
        return cls(EditTag.VARIABLE_MODIFICATION, name)

    @classmethod
    def function(cls, name: str) -> "EditKind":
        return cls(EditTag.FUNCTION_SCOPE_CHANGE, name)

    def __str__(self) -> str:
        return self.tag.value if self.name is None else f"{self.tag.value}({self.name})"


@dataclass(frozen=True)
class ChangeSite:
    anchor_line: int
    hunk: DiffHunk
    edit_kinds: FrozenSet[EditKind]

    @property
    def has_condition(self) -> bool:
        return EditKind.condition() in self.edit_kinds

    @property
    def variables(self) -> List[str]:
        return sorted(k.name for k in self.edit_kinds if k.tag is EditTag.VARIABLE_MODIFICATION)

    @property
    def functions(self) -> List[str]:
        return sorted(k.name for k in self.edit_kinds if k.tag is EditTag.FUNCTION_SCOPE_CHANGE)


def _kinds_of(stmt: Stmt) -> Set[EditKind]:
    kinds: Set[EditKind] = set()
    if isinstance(stmt, (If, While, For)):
        kinds.add(EditKind.condition())
    if isinstance(stmt, (Let, Assign)):
        kinds.add(EditKind.variable(stmt.name))
    elif isinstance(stmt, For):
        kinds.add(EditKind.variable(stmt.var))
    elif isinstance(stmt, While):
        kinds.update(EditKind.variable(v) for v in expr_vars(stmt.cond))
    elif isinstance(stmt, (Return, Print, ExprStmt)):
        for expr in own_exprs(stmt):
            for node in iter_exprs(expr):
                if isinstance(node, Binary):
                    kinds.update(EditKind.variable(v) for v in expr_vars(node))
    return kinds


def _header_kinds(student: Program, fixed: Program, s_line: int, f_lines: Sequence[int]) -> Set[EditKind]:
    fn = student.enclosing_function(s_line)
    before = set(fn.params) if fn else set()
    after: Set[str] = set()
    for line in f_lines:
        other = next((f for f in fixed.functions if f.header_line == line), None)
        if other is not None:
            after.update(other.params)
    return {EditKind.variable(v) for v in sorted(before ^ after)}


def _statement_anchor(p: Program, line: int) -> int:
    """``line`` itself, or the first body line when ``line`` is a function header."""
    statement_lines = set(p.statement_lines())
    if line in statement_lines:
        return line
    fn = p.enclosing_function(line)
    if fn is not None and fn.first_body_line in statement_lines:
        return fn.first_body_line
    return line


def _insert_anchor(p: Program, hunk: DiffHunk) -> int:
    """Student line an inserted hunk attaches to.

    The unchanged line before the insertion, moved from a function header to
    its first body line. A function without statements keeps its header line,
    the only line it owns and a node of the dependence graph.
    """
    if hunk.preceding is None:
        lines = p.statement_lines()
        return lines[0] if lines else p.functions[0].header_line
    line, role = hunk.preceding
    if role == "header":
        return _statement_anchor(p, line)
    return line


def anchor_and_classify(hunks: Sequence[DiffHunk], student: Program, fixed: Program) -> List[ChangeSite]:
    if not hunks:
        raise EmptyDiff()
    sites: List[ChangeSite] = []
    for hunk in hunks:
        fixed_stmts = [s for line in hunk.fixed_lines for s in fixed.statements_at(line)]
        if hunk.kind is HunkKind.INSERT:
            pairs = [(_insert_anchor(student, hunk), None, fixed_stmts, hunk.fixed_lines)]
        else:
            pairs = []
            positional = len(hunk.student_lines) == len(hunk.fixed_lines)
            for idx, line in enumerate(hunk.student_lines):
                if positional:
                    f_lines = (hunk.fixed_lines[idx],)
                    f_stmts = list(fixed.statements_at(f_lines[0]))
                else:
                    f_lines, f_stmts = hunk.fixed_lines, fixed_stmts
                pairs.append((line, line, f_stmts, f_lines))

        seen: Set[int] = set()
        for anchor, s_line, f_stmts, f_lines in pairs:
            kinds: Set[EditKind] = set()
            if s_line is not None:
                student_stmts = student.statements_at(s_line)
                if not student_stmts:
                    kinds |= _header_kinds(student, fixed, s_line, f_lines)
                for stmt in student_stmts:
                    kinds |= _kinds_of(stmt)
                anchor = _statement_anchor(student, s_line)
            for stmt in f_stmts:
                kinds |= _kinds_of(stmt)
            fn = student.enclosing_function(anchor)
            if fn is not None:
                kinds.add(EditKind.function(fn.name))
            if anchor in seen:
                prev = next(s for s in sites if s.anchor_line == anchor and s.hunk is hunk)
                sites[sites.index(prev)] = ChangeSite(anchor, hunk, prev.edit_kinds | frozenset(kinds))
                continue
            seen.add(anchor)
            sites.append(ChangeSite(anchor, hunk, frozenset(kinds)))
    for site in sites:
        log.debug("change site at line %d: %s", site.anchor_line,
                  ", ".join(str(k) for k in sorted(site.edit_kinds)))
    return sites

