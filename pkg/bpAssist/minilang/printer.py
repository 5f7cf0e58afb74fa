"""
Canonical MiniLang formatting.

One statement per line, two spaces of indent per block depth, every
block closed on its own line, empty ``else`` blocks dropped.  The
printer also reports, for every emitted row, which source line of the
printed program it came from; the differ relies on this to map rows back
onto the student's editor lines.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from .lexer import encode_string
from .nodes import (
    Assign, Binary, Block, BoolLit, Call, Expr, ExprStmt, For, FunctionDef, If,
    IntLit, Let, Print, Program, Return, Stmt, StrLit, Unary, Var, While,
)
from .parser import binding_power

INDENT = "  "


@dataclass(frozen=True)
class Row:
    text: str
    origin: Optional[int]  # source line of the node this row prints
    role: str              # header | stmt | else | close
    function: str


def format_expr(expr: Expr) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, StrLit):
        return encode_string(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Call):
        return f"{expr.name}({', '.join(format_expr(a) for a in expr.args)})"
    if isinstance(expr, Unary):
        inner = format_expr(expr.operand)
        if isinstance(expr.operand, Binary):
            inner = f"({inner})"
        return f"{expr.op}{inner}"
    level = binding_power(expr.op)
    left = format_expr(expr.left)
    if isinstance(expr.left, Binary) and binding_power(expr.left.op) < level:
        left = f"({left})"
    right = format_expr(expr.right)
    if isinstance(expr.right, Binary) and binding_power(expr.right.op) <= level:
        right = f"({right})"
    return f"{left} {expr.op} {right}"


def _header(stmt: Stmt) -> str:
    if isinstance(stmt, If):
        return f"if ({format_expr(stmt.cond)}) {{"
    if isinstance(stmt, While):
        return f"while ({format_expr(stmt.cond)}) {{"
    if isinstance(stmt, For):
        return f"for ({stmt.var} in {format_expr(stmt.start)}..{format_expr(stmt.stop)}) {{"
    if isinstance(stmt, Let):
        return f"let {stmt.name} = {format_expr(stmt.expr)};"
    if isinstance(stmt, Assign):
        return f"{stmt.name} = {format_expr(stmt.expr)};"
    if isinstance(stmt, Return):
        return f"return {format_expr(stmt.expr)};"
    if isinstance(stmt, Print):
        return f"print({format_expr(stmt.expr)});"
    return f"{format_expr(stmt.call)};"


class _Renderer:
    def __init__(self, fn: FunctionDef) -> None:
        self.fn = fn
        self.rows: List[Row] = []

    def emit(self, depth: int, text: str, origin: Optional[int], role: str) -> None:
        self.rows.append(Row(INDENT * depth + text, origin, role, self.fn.name))

    def block(self, block: Block, depth: int) -> None:
        for stmt in block:
            self.statement(stmt, depth)

    def statement(self, stmt: Stmt, depth: int, prefix: str = "") -> None:
        self.emit(depth, prefix + _header(stmt), stmt.line, "stmt")
        if isinstance(stmt, If):
            self.block(stmt.then, depth + 1)
            orelse = stmt.orelse
            if orelse and len(orelse) == 1 and isinstance(orelse[0], If):
                self.statement(orelse[0], depth, prefix="} else ")
                return
            if orelse:
                self.emit(depth, "} else {", stmt.line, "else")
                self.block(orelse, depth + 1)
            self.emit(depth, "}", None, "close")
        elif isinstance(stmt, (While, For)):
            self.block(stmt.body, depth + 1)
            self.emit(depth, "}", None, "close")


def render_rows(p: Program) -> List[Row]:
    rows: List[Row] = []
    for fn in p.functions:
        r = _Renderer(fn)
        r.emit(0, f"fun {fn.name}({', '.join(fn.params)}) {{", fn.header_line, "header")
        r.block(fn.body, 1)
        r.emit(0, "}", None, "close")
        rows.extend(r.rows)
    return rows


def pretty_print(p: Program) -> str:
    """Canonical source text of ``p``."""
    return "".join(row.text + "\n" for row in render_rows(p))
