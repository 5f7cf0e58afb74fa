"""
Line-annotated abstract syntax for MiniLang.

Every node carries the source line of its first token.  Line numbers are
excluded from equality, so ``==`` between two trees is structural
equality; code that cares about placement reads ``.line`` explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple, Union


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class IntLit:
    value: int
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class StrLit:
    value: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "!" | "-"
    operand: "Expr"
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expr", ...] = ()
    line: int = field(default=0, compare=False)


Expr = Union[IntLit, BoolLit, StrLit, Var, Unary, Binary, Call]

BINARY_OPS = ("||", "&&", "==", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/", "%")
UNARY_OPS = ("!", "-")


# ---------------------------------------------------------------------------
# statements
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Let:
    name: str
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assign:
    name: str
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Tuple["Stmt", ...]
    orelse: Optional[Tuple["Stmt", ...]] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Tuple["Stmt", ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class For:
    var: str
    start: Expr
    stop: Expr
    body: Tuple["Stmt", ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Return:
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Print:
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ExprStmt:
    call: Call
    line: int = field(default=0, compare=False)


Stmt = Union[Let, Assign, If, While, For, Return, Print, ExprStmt]
Block = Tuple[Stmt, ...]

CONTROL_TYPES = (If, While, For)


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: Tuple[str, ...]
    body: Block
    header_line: int = field(default=0, compare=False)
    first_body_line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Program:
    functions: Tuple[FunctionDef, ...]
    source_lines: int = field(default=0, compare=False)

    def function(self, name: str) -> Optional[FunctionDef]:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None

    def statements(self) -> Iterator[Tuple[FunctionDef, Stmt]]:
        """All statements in source order, paired with their function."""
        for fn in self.functions:
            for stmt in iter_statements(fn.body):
                yield fn, stmt

    def statement_lines(self) -> List[int]:
        return sorted({stmt.line for _, stmt in self.statements()})

    def statements_at(self, line: int) -> List[Stmt]:
        return [stmt for _, stmt in self.statements() if stmt.line == line]

    def enclosing_function(self, line: int) -> Optional[FunctionDef]:
        for fn in self.functions:
            if fn.header_line <= line <= function_end_line(fn):
                return fn
        return None

    def line_index(self) -> Dict[int, List[Stmt]]:
        index: Dict[int, List[Stmt]] = {}
        for _, stmt in self.statements():
            index.setdefault(stmt.line, []).append(stmt)
        return index


# ---------------------------------------------------------------------------
# traversal helpers
# ---------------------------------------------------------------------------
def child_blocks(stmt: Stmt) -> List[Block]:
    if isinstance(stmt, If):
        return [stmt.then] + ([stmt.orelse] if stmt.orelse else [])
    if isinstance(stmt, (While, For)):
        return [stmt.body]
    return []


def iter_statements(block: Block) -> Iterator[Stmt]:
    """Pre-order walk; a construct precedes the statements of its blocks."""
    for stmt in block:
        yield stmt
        for sub in child_blocks(stmt):
            yield from iter_statements(sub)


def iter_exprs(expr: Expr) -> Iterator[Expr]:
    yield expr
    if isinstance(expr, Unary):
        yield from iter_exprs(expr.operand)
    elif isinstance(expr, Binary):
        yield from iter_exprs(expr.left)
        yield from iter_exprs(expr.right)
    elif isinstance(expr, Call):
        for arg in expr.args:
            yield from iter_exprs(arg)


def own_exprs(stmt: Stmt) -> List[Expr]:
    """Expressions evaluated by the statement itself, not by its blocks."""
    if isinstance(stmt, (Let, Assign)):
        return [stmt.expr]
    if isinstance(stmt, (If, While)):
        return [stmt.cond]
    if isinstance(stmt, For):
        return [stmt.start, stmt.stop]
    if isinstance(stmt, (Return, Print)):
        return [stmt.expr]
    return [stmt.call]


def expr_vars(expr: Expr) -> List[str]:
    seen: List[str] = []
    for node in iter_exprs(expr):
        if isinstance(node, Var) and node.name not in seen:
            seen.append(node.name)
    return seen


def stmt_reads(stmt: Stmt) -> List[str]:
    names: List[str] = []
    for expr in own_exprs(stmt):
        for name in expr_vars(expr):
            if name not in names:
                names.append(name)
    return names


def stmt_writes(stmt: Stmt) -> List[str]:
    if isinstance(stmt, (Let, Assign)):
        return [stmt.name]
    if isinstance(stmt, For):
        return [stmt.var]
    return []


def stmt_calls(stmt: Stmt) -> List[str]:
    names: List[str] = []
    for expr in own_exprs(stmt):
        for node in iter_exprs(expr):
            if isinstance(node, Call):
                names.append(node.name)
    return names


def last_line(stmt: Stmt) -> int:
    """Largest statement line inside ``stmt`` (itself included)."""
    return max(s.line for s in iter_statements((stmt,)))


def function_end_line(fn: FunctionDef) -> int:
    lines = [s.line for s in iter_statements(fn.body)]
    return max(lines + [fn.first_body_line, fn.header_line])
