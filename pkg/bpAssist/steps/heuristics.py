"""
Step: heuristics

Candidate breakpoint lines proposed by the three placement rules:

  H1-Conditional  a condition changed: the first line of every block the
                  construct guards, plus the first line after it.
  H2-Variable     a variable changed: every line writing it and the line
                  right after each write.
  H3-Function     anything changed inside a function: its first body line
                  and every line calling it.

All candidates are lines of the student program.  The pool keeps every
(source, reason) pair per line so explanations can say why a line was kept.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from ..minilang.nodes import (
    CONTROL_TYPES, FunctionDef, Program, Stmt, child_blocks, iter_statements,
    last_line, stmt_calls, stmt_writes,
)
from .dependence import DependenceGraph
from .diffing import ChangeSite

log = logging.getLogger(__name__)


class HeuristicSource(str, Enum):
    H1 = "H1-Conditional"
    H2 = "H2-Variable"
    H3 = "H3-Function"

    @property
    def short(self) -> str:
        return self.value.split("-")[0]


@dataclass(frozen=True, order=True)
class HeuristicCandidate:
    line: int
    source: HeuristicSource
    reason: str  # branch-entry | after-construct | var-write | var-after-write | function-entry | call-site

    @property
    def tag(self) -> str:
        return f"{self.source.short}:{self.reason}"


def _function_lines(fn: FunctionDef) -> List[int]:
    return sorted({s.line for s in iter_statements(fn.body)})


def _next_line(lines: Sequence[int], after: int) -> Optional[int]:
    return next((l for l in lines if l > after), None)


def _construct_for(p: Program, line: int) -> Optional[Stmt]:
    """The If/While/For written at ``line``, else the innermost one enclosing it."""
    at = [s for s in p.statements_at(line) if isinstance(s, CONTROL_TYPES)]
    if at:
        return at[0]
    best: Optional[Stmt] = None
    for _, stmt in p.statements():
        if isinstance(stmt, CONTROL_TYPES) and stmt.line < line <= last_line(stmt):
            if best is None or stmt.line > best.line:
                best = stmt
    return best


def conditional_heuristic(site: ChangeSite, p: Program,
                          include_exit: bool = True) -> List[HeuristicCandidate]:
    if not site.has_condition:
        return []
    construct = _construct_for(p, site.anchor_line)
    if construct is None:
        return []
    out = [HeuristicCandidate(block[0].line, HeuristicSource.H1, "branch-entry")
           for block in child_blocks(construct) if block]
    fn = p.enclosing_function(construct.line)
    if include_exit and fn is not None:
        after = _next_line(_function_lines(fn), last_line(construct))
        if after is not None:
            out.append(HeuristicCandidate(after, HeuristicSource.H1, "after-construct"))
    return sorted(set(out))


def variable_heuristic(site: ChangeSite, p: Program,
                       g: Optional[DependenceGraph] = None) -> List[HeuristicCandidate]:
    fn = p.enclosing_function(site.anchor_line)
    if fn is None or not site.variables:
        return []
    lines = _function_lines(fn)
    out = set()
    for var in site.variables:
        for stmt in iter_statements(fn.body):
            if var not in stmt_writes(stmt):
                continue
            out.add(HeuristicCandidate(stmt.line, HeuristicSource.H2, "var-write"))
            nxt = _next_line(lines, stmt.line)
            if nxt is not None:
                out.add(HeuristicCandidate(nxt, HeuristicSource.H2, "var-after-write"))
    if g is not None:
        out = {c for c in out if c.line in g.nodes}
    return sorted(out)


def function_heuristic(site: ChangeSite, p: Program) -> List[HeuristicCandidate]:
    out = set()
    statement_lines = set(p.statement_lines())
    for name in site.functions:
        fn = p.function(name)
        if fn is None:
            continue
        if fn.first_body_line in statement_lines:
            out.add(HeuristicCandidate(fn.first_body_line, HeuristicSource.H3, "function-entry"))
        for _, stmt in p.statements():
            if name in stmt_calls(stmt):
                out.add(HeuristicCandidate(stmt.line, HeuristicSource.H3, "call-site"))
    return sorted(out)


@dataclass(frozen=True)
class HeuristicPool:
    candidates: Tuple[HeuristicCandidate, ...] = ()
    by_line: Dict[int, Tuple[HeuristicCandidate, ...]] = field(default_factory=dict, compare=False)

    @property
    def lines(self) -> FrozenSet[int]:
        return frozenset(self.by_line)

    def provenance(self, line: int) -> List[str]:
        return sorted({c.tag for c in self.by_line.get(line, ())})

    def reasons(self, line: int) -> List[str]:
        return sorted({c.reason for c in self.by_line.get(line, ())})


def _pool(candidates: Iterable[HeuristicCandidate]) -> HeuristicPool:
    ordered = tuple(sorted(set(candidates)))
    by_line: Dict[int, List[HeuristicCandidate]] = {}
    for c in ordered:
        by_line.setdefault(c.line, []).append(c)
    return HeuristicPool(ordered, {k: tuple(v) for k, v in by_line.items()})


def heuristic_candidates(sites: Sequence[ChangeSite], p: Program,
                         g: Optional[DependenceGraph] = None,
                         include_exit: bool = True) -> HeuristicPool:
    found: List[HeuristicCandidate] = []
    for site in sites:
        found += conditional_heuristic(site, p, include_exit)
        found += variable_heuristic(site, p, g)
        found += function_heuristic(site, p)
    pool = _pool(found)
    log.debug("heuristic pool: %s", sorted(pool.lines))
    return pool
