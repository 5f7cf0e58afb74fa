"""
Step: dependence

Inputs:
  A parsed student ``Program``.

Outputs:
  Cfg               intraprocedural control-flow graph, one node per statement
                    plus an entry/exit pair per function.
  reaching defs     (line, variable) -> set of defining lines.
  DependenceGraph   line-keyed graph with data, control and call edges.
  slices            backward / forward / region closures over that graph.

Control dependence is syntactic: a construct controls the statements written
directly in its blocks, and a nested construct relays control to its own
children.  Calls are context-insensitive: a call site feeds the callee header
(where parameters are defined) and every ``return`` of the callee feeds the
call site back.

Usage Example:
  g = build_dependence_graph(parse(src))
  region = slice_region(g, {4})
"""

# ────────────────────────────── standard library ─────────────────────────────
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

# ──────────────────────────────── local ──────────────────────────────────────
from ..errors import UnknownLine
from ..minilang.nodes import (
    Block, For, FunctionDef, If, Program, Return, Stmt, While,
    child_blocks, iter_statements, stmt_calls, stmt_reads, stmt_writes,
)

log = logging.getLogger(__name__)

LineSet = FrozenSet[int]
Def = Tuple[str, int]  # (variable, defining line)


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                           control-flow graph                             │
# ╰──────────────────────────────────────────────────────────────────────────╯
@dataclass(frozen=True)
class CfgNode:
    id: int
    line: int
    function: str
    kind: str                       # entry | stmt | exit
    stmt: Optional[Stmt] = field(default=None, compare=False)


@dataclass
class Cfg:
    nodes: Dict[int, CfgNode] = field(default_factory=dict)
    succ: Dict[int, Set[int]] = field(default_factory=dict)
    entry: Dict[str, int] = field(default_factory=dict)
    exit: Dict[str, int] = field(default_factory=dict)

    def successors(self, n: int) -> Set[int]:
        return self.succ.get(n, set())

    @cached_property
    def pred(self) -> Dict[int, Set[int]]:
        pred: Dict[int, Set[int]] = {n: set() for n in self.nodes}
        for src, dsts in self.succ.items():
            for dst in dsts:
                pred[dst].add(src)
        return pred

    def predecessors(self, n: int) -> Set[int]:
        return self.pred.get(n, set())

    def line_successors(self, line: int) -> Set[int]:
        """Lines of statements that may run right after the statement(s) at ``line``."""
        out: Set[int] = set()
        for node in self.nodes.values():
            if node.kind == "stmt" and node.line == line:
                out.update(self.nodes[s].line for s in self.successors(node.id)
                           if self.nodes[s].kind == "stmt")
        return out


class _CfgBuilder:
    def __init__(self, cfg: Cfg, fn: FunctionDef) -> None:
        self.cfg = cfg
        self.fn = fn

    def node(self, line: int, kind: str, stmt: Optional[Stmt] = None) -> int:
        nid = len(self.cfg.nodes)
        self.cfg.nodes[nid] = CfgNode(nid, line, self.fn.name, kind, stmt)
        self.cfg.succ[nid] = set()
        return nid

    def build(self) -> None:
        entry = self.node(self.fn.header_line, "entry")
        exit_ = self.node(self.fn.header_line, "exit")
        self.exit_id = exit_
        self.cfg.entry[self.fn.name] = entry
        self.cfg.exit[self.fn.name] = exit_
        self.cfg.succ[entry].add(self.block(self.fn.body, exit_))

    def block(self, block: Block, follow: int) -> int:
        """Wire ``block`` so it falls through to ``follow``; returns its first node."""
        for stmt in reversed(block):
            follow = self.statement(stmt, follow)
        return follow

    def statement(self, stmt: Stmt, follow: int) -> int:
        nid = self.node(stmt.line, "stmt", stmt)
        succ = self.cfg.succ[nid]
        if isinstance(stmt, If):
            succ.add(self.block(stmt.then, follow))
            succ.add(self.block(stmt.orelse, follow) if stmt.orelse else follow)
        elif isinstance(stmt, (While, For)):
            succ.add(self.block(stmt.body, nid))  # back-edge
            succ.add(follow)
        elif isinstance(stmt, Return):
            succ.add(self.exit_id)
        else:
            succ.add(follow)
        return nid


def _prune(cfg: Cfg) -> None:
    seen: Set[int] = set()
    queue = deque(cfg.entry.values())
    seen.update(queue)
    while queue:
        cur = queue.popleft()
        for nxt in cfg.succ[cur]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    # exits stay even when every path loops forever
    seen.update(cfg.exit.values())
    dead = [n for n in cfg.nodes if n not in seen]
    for n in dead:
        del cfg.nodes[n]
        del cfg.succ[n]
    if dead:
        log.debug("pruned %d unreachable CFG node(s)", len(dead))


def build_cfg(p: Program) -> Cfg:
    """Intraprocedural CFG for every function of ``p``."""
    cfg = Cfg()
    for fn in p.functions:
        _CfgBuilder(cfg, fn).build()
    _prune(cfg)
    return cfg


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                         reaching definitions                             │
# ╰──────────────────────────────────────────────────────────────────────────╯
class ReachingDefinitions:
    """
    Forward may-analysis solved with a worklist.

    gen(n)  = definitions made by n (Let/Assign target, For variable, the
              parameters at a function entry);
    kill(n) = every other definition of the same variables.
    """

    def __init__(self, cfg: Cfg, p: Program) -> None:
        self.cfg = cfg
        self.params = {fn.name: fn.params for fn in p.functions}

    def gen(self, n: int) -> Set[Def]:
        node = self.cfg.nodes[n]
        if node.kind == "entry":
            return {(name, node.line) for name in self.params[node.function]}
        if node.kind == "stmt":
            return {(name, node.line) for name in stmt_writes(node.stmt)}
        return set()

    def killed_vars(self, n: int) -> Set[str]:
        return {name for name, _ in self.gen(n)}

    def solve(self) -> Tuple[Dict[int, Set[Def]], Dict[int, Set[Def]]]:
        in_: Dict[int, Set[Def]] = {n: set() for n in self.cfg.nodes}
        out: Dict[int, Set[Def]] = {n: set() for n in self.cfg.nodes}
        queue = deque(sorted(self.cfg.nodes))
        queued = set(queue)
        while queue:
            n = queue.popleft()
            queued.discard(n)
            facts: Set[Def] = set()
            for pred in self.cfg.predecessors(n):
                facts |= out[pred]
            in_[n] = facts
            killed = self.killed_vars(n)
            new_out = self.gen(n) | {d for d in facts if d[0] not in killed}
            if new_out != out[n]:
                out[n] = new_out
                for succ in sorted(self.cfg.successors(n)):
                    if succ not in queued:
                        queue.append(succ)
                        queued.add(succ)
        return in_, out


def reaching_definitions(cfg: Cfg, p: Program) -> Dict[Tuple[int, str], Set[int]]:
    """Map every (line, used variable) to the lines whose definitions may reach it."""
    in_, _ = ReachingDefinitions(cfg, p).solve()
    uses: Dict[Tuple[int, str], Set[int]] = {}
    for n, node in cfg.nodes.items():
        if node.kind != "stmt":
            continue
        for name in stmt_reads(node.stmt):
            lines = uses.setdefault((node.line, name), set())
            lines.update(line for var, line in in_[n] if var == name)
    return uses


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                           dependence graph                               │
# ╰──────────────────────────────────────────────────────────────────────────╯
@dataclass(frozen=True)
class DependenceGraph:
    nodes: LineSet
    data_edges: FrozenSet[Tuple[int, int, str]] = frozenset()
    control_edges: FrozenSet[Tuple[int, int]] = frozenset()
    call_edges: FrozenSet[Tuple[int, int]] = frozenset()

    def edges(self) -> Iterable[Tuple[int, int]]:
        for src, dst, _ in self.data_edges:
            yield src, dst
        yield from self.control_edges
        yield from self.call_edges

    @cached_property
    def forward(self) -> Dict[int, List[int]]:
        graph: Dict[int, Set[int]] = {n: set() for n in self.nodes}
        for src, dst in self.edges():
            graph[src].add(dst)
        return {n: sorted(dsts) for n, dsts in graph.items()}

    @cached_property
    def reverse(self) -> Dict[int, List[int]]:
        graph: Dict[int, Set[int]] = {n: set() for n in self.nodes}
        for src, dst in self.edges():
            graph[dst].add(src)
        return {n: sorted(srcs) for n, srcs in graph.items()}

    def to_dot(self) -> str:
        out = ["digraph dependence {", "  node [shape=box];"]
        for n in sorted(self.nodes):
            out.append(f'  {n} [label="{n}"];')
        for src, dst, var in sorted(self.data_edges):
            out.append(f'  {src} -> {dst} [label="{var}", style=solid];')
        for src, dst in sorted(self.control_edges):
            out.append(f"  {src} -> {dst} [style=dashed];")
        for src, dst in sorted(self.call_edges):
            out.append(f"  {src} -> {dst} [style=dotted];")
        out.append("}")
        return "\n".join(out) + "\n"


def _control_edges(p: Program) -> Set[Tuple[int, int]]:
    edges: Set[Tuple[int, int]] = set()
    for _, stmt in p.statements():
        for block in child_blocks(stmt):
            for child in block:
                edges.add((stmt.line, child.line))
    return edges


def _call_edges(p: Program) -> Set[Tuple[int, int]]:
    returns: Dict[str, List[int]] = {
        fn.name: [s.line for s in iter_statements(fn.body) if isinstance(s, Return)]
        for fn in p.functions
    }
    edges: Set[Tuple[int, int]] = set()
    for _, stmt in p.statements():
        for callee in stmt_calls(stmt):
            target = p.function(callee)
            if target is None:
                continue
            edges.add((stmt.line, target.header_line))
            for ret in returns[callee]:
                edges.add((ret, stmt.line))
    return edges


def build_dependence_graph(p: Program) -> DependenceGraph:
    cfg = build_cfg(p)
    data = {
        (d, line, var)
        for (line, var), defs in reaching_definitions(cfg, p).items()
        for d in defs
    }
    nodes = set(p.statement_lines()) | {fn.header_line for fn in p.functions}
    g = DependenceGraph(
        nodes=frozenset(nodes),
        data_edges=frozenset(data),
        control_edges=frozenset(_control_edges(p)),
        call_edges=frozenset(_call_edges(p)),
    )
    log.debug("dependence graph: %d nodes, %d data / %d control / %d call edges",
              len(g.nodes), len(g.data_edges), len(g.control_edges), len(g.call_edges))
    return g


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                slicing                                   │
# ╰──────────────────────────────────────────────────────────────────────────╯
def _check_seeds(g: DependenceGraph, seeds: Iterable[int]) -> List[int]:
    seeds = sorted(set(seeds))
    for s in seeds:
        if s not in g.nodes:
            raise UnknownLine(s)
    return seeds


def bfs_distances(graph: Dict[int, List[int]], starts: Iterable[int]) -> Dict[int, int]:
    """Hop count from the nearest start for every reachable line."""
    dist: Dict[int, int] = {}
    queue: deque = deque()
    for s in starts:
        dist[s] = 0
        queue.append(s)
    while queue:
        cur = queue.popleft()
        for nxt in graph.get(cur, []):
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


def backward_slice(g: DependenceGraph, seeds: Iterable[int]) -> LineSet:
    return frozenset(bfs_distances(g.reverse, _check_seeds(g, seeds)))


def forward_slice(g: DependenceGraph, seeds: Iterable[int]) -> LineSet:
    return frozenset(bfs_distances(g.forward, _check_seeds(g, seeds)))


def slice_region(g: DependenceGraph, seeds: Iterable[int]) -> LineSet:
    seeds = _check_seeds(g, seeds)
    return backward_slice(g, seeds) | forward_slice(g, seeds)
