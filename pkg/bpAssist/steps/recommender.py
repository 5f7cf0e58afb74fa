"""
Step: recommender

Inputs:
  student Program, fixed Program, the failed TestCase, RecommenderConfig.

Outputs:
  BreakpointPlan   BugSite breakpoints on the diff anchors, then Affected
                   breakpoints on lines that are both in the slice region of
                   the anchors and in the heuristic pool.

When the plan is longer than ``max_breakpoints`` the BugSite lines are kept
first; Affected lines are ranked by forward dependence distance from the
nearest bug site, lines only reachable backwards come after (ranked by
backward distance), and ties go to the smaller line.

Serialized form (UTF-8 JSON, fixed key order)::

    {"task_id": ..., "failed_test_id": ...,
     "breakpoints": [{"line", "kind", "provenance", "explanation"}]}
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

from ..config import RecommenderConfig
from ..errors import EmptyDiff, FixDoesNotPass
from ..minilang import DEFAULT_STEP_LIMIT, TestCase, TestVerdict, pretty_print, run_test
from ..minilang.nodes import Program
from .dependence import DependenceGraph, bfs_distances, build_dependence_graph, slice_region
from .diffing import ChangeSite, anchor_and_classify, diff_lines
from .heuristics import HeuristicPool, heuristic_candidates

log = logging.getLogger(__name__)


class BreakpointKind(str, Enum):
    BUG_SITE = "BugSite"
    AFFECTED = "Affected"


@dataclass(frozen=True)
class Breakpoint:
    line: int
    kind: BreakpointKind
    provenance: Tuple[str, ...] = ()
    explanation: Optional[str] = None

    @property
    def reasons(self) -> List[str]:
        """Heuristic reasons, e.g. ``var-write`` out of ``H2:var-write``."""
        return [tag.split(":", 1)[1] for tag in self.provenance if ":" in tag]

    def to_json(self) -> Dict[str, Any]:
        return {
            "line": self.line,
            "kind": self.kind.value,
            "provenance": list(self.provenance),
            "explanation": self.explanation,
        }


@dataclass(frozen=True)
class BreakpointPlan:
    task_id: str
    failed_test_id: str
    breakpoints: Tuple[Breakpoint, ...] = ()
    fixed_source_digest: str = ""

    @property
    def lines(self) -> List[int]:
        return [b.line for b in self.breakpoints]

    def of_kind(self, kind: BreakpointKind) -> List[Breakpoint]:
        return [b for b in self.breakpoints if b.kind is kind]

    def to_json(self) -> Dict[str, Any]:
        return {
            "task_id": self.task_id,
            "failed_test_id": self.failed_test_id,
            "breakpoints": [b.to_json() for b in self.breakpoints],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"


@dataclass(frozen=True)
class Recommendation:
    """A plan together with the intermediate artefacts it was derived from."""
    plan: BreakpointPlan
    sites: Tuple[ChangeSite, ...] = ()
    graph: Optional[DependenceGraph] = None
    region: FrozenSet[int] = frozenset()
    pool: HeuristicPool = field(default_factory=HeuristicPool)
    fixed_verdict: Optional[TestVerdict] = None


def source_digest(p: Program) -> str:
    return hashlib.sha256(pretty_print(p).encode("utf-8")).hexdigest()


def _priority(line: int, forward: Dict[int, int], backward: Dict[int, int]) -> Tuple[int, float, int]:
    if line in forward:
        return (0, forward[line], line)
    return (1, backward.get(line, float("inf")), line)


def analyze(student: Program, fixed: Program, failed_test: TestCase,
            cfg: RecommenderConfig = RecommenderConfig(), task_id: str = "",
            step_limit: int = DEFAULT_STEP_LIMIT) -> Recommendation:
    verdict = run_test(fixed, failed_test, step_limit)
    if not verdict.passed:
        raise FixDoesNotPass(
            f"fixed program does not pass '{failed_test.id}' ({verdict.status.value})")
    digest = source_digest(fixed)
    empty = BreakpointPlan(task_id, failed_test.id, (), digest)

    try:
        sites = anchor_and_classify(diff_lines(student, fixed), student, fixed)
    except EmptyDiff:
        log.info("student and fixed programs are identical; empty plan")
        return Recommendation(empty, fixed_verdict=verdict)

    g = build_dependence_graph(student)
    bug_sites = sorted({s.anchor_line for s in sites})
    region = slice_region(g, bug_sites)
    pool = heuristic_candidates(sites, student, g, cfg.h1_include_exit)
    affected = (region & pool.lines) - set(bug_sites)
    log.info("bug sites %s, slice %d line(s), pool %d line(s), affected %s",
             bug_sites, len(region), len(pool.lines), sorted(affected))

    cap = cfg.max_breakpoints
    kept_bugs = bug_sites[:cap]
    forward = bfs_distances(g.forward, bug_sites)
    backward = bfs_distances(g.reverse, bug_sites)
    ranked = sorted(affected, key=lambda l: _priority(l, forward, backward))
    kept_affected = sorted(ranked[:max(cap - len(kept_bugs), 0)])
    if len(kept_bugs) + len(affected) > cap:
        log.info("plan truncated to %d breakpoint(s)", cap)

    breakpoints = [Breakpoint(l, BreakpointKind.BUG_SITE, ("diff",)) for l in kept_bugs]
    breakpoints += [
        Breakpoint(l, BreakpointKind.AFFECTED, tuple(sorted(["slice"] + pool.provenance(l))))
        for l in kept_affected
    ]
    plan = BreakpointPlan(task_id, failed_test.id, tuple(breakpoints), digest)
    return Recommendation(plan, tuple(sites), g, region, pool, verdict)


def recommend(student: Program, fixed: Program, failed_test: TestCase,
              cfg: RecommenderConfig = RecommenderConfig(), task_id: str = "",
              step_limit: int = DEFAULT_STEP_LIMIT) -> BreakpointPlan:
    return analyze(student, fixed, failed_test, cfg, task_id, step_limit).plan


def with_explanations(plan: BreakpointPlan, texts: List[str]) -> BreakpointPlan:
    if len(texts) != len(plan.breakpoints):
        raise ValueError("one explanation per breakpoint expected")
    bps = tuple(replace(b, explanation=t) for b, t in zip(plan.breakpoints, texts))
    return replace(plan, breakpoints=bps)
