"""Tokenizer, parser and canonical printer."""
from __future__ import annotations

import random

import pytest

from bpAssist.errors import DuplicateFunction, LexError, ParseError
from bpAssist.minilang import TokenKind, parse, pretty_print, tokenize
from bpAssist.minilang.nodes import (
    Assign, Binary, BoolLit, Call, ExprStmt, For, FunctionDef, If, IntLit, Let,
    Print, Program, Return, StrLit, Unary, Var, While,
)

from .conftest import STU_SRC


def test_tokenize_kinds_and_lines():
    toks = tokenize('let x = 1;\n// note\nprint("hi");')
    assert [t.kind for t in toks[:5]] == [
        TokenKind.KEYWORD, TokenKind.IDENT, TokenKind.OPERATOR, TokenKind.INT, TokenKind.PUNCT,
    ]
    assert toks[0].line == 1
    assert toks[5].lexeme == "print" and toks[5].line == 3
    assert toks[7].kind is TokenKind.STRING


def test_tokenize_range_operator():
    lexemes = [t.lexeme for t in tokenize("for (k in 1..n) {}")]
    assert lexemes == ["for", "(", "k", "in", "1", "..", "n", ")", "{", "}"]


def test_illegal_character_reports_line():
    with pytest.raises(LexError, match="line 2"):
        tokenize("let x = 1;\nlet y = 2 @ 3;")


def test_unterminated_string():
    with pytest.raises(LexError, match="unterminated"):
        tokenize('print("oops);')


def test_parse_reference_program_lines():
    p = parse(STU_SRC)
    fn = p.function("sum")
    assert fn.params == ("n",)
    assert fn.header_line == 1 and fn.first_body_line == 2
    assert p.statement_lines() == [2, 3, 4, 5, 6, 8]
    loop = p.statements_at(4)[0]
    assert isinstance(loop, While)
    assert [s.line for s in loop.body] == [5, 6]


def test_missing_semicolon():
    with pytest.raises(ParseError) as err:
        parse("fun f() {\n  let x = 1\n}\n")
    assert "expected ';'" in str(err.value)
    assert "line 3" in str(err.value)


def test_duplicate_function():
    with pytest.raises(DuplicateFunction):
        parse("fun f() { return 1; }\nfun f() { return 2; }\n")


def test_bare_expression_is_rejected():
    with pytest.raises(ParseError, match="bare expression"):
        parse("fun f(x) {\n  x + 1;\n}\n")


def test_empty_source():
    with pytest.raises(ParseError):
        parse("// nothing here\n")


def test_precedence():
    p = parse("fun f() {\n  return 1 + 2 * 3 < 10 && !false;\n}\n")
    expr = p.statements_at(2)[0].expr
    assert expr.op == "&&"
    assert expr.left.op == "<"
    assert expr.left.left == Binary("+", IntLit(1), Binary("*", IntLit(2), IntLit(3)))
    assert expr.right == Unary("!", BoolLit(False))


def test_else_if_chain():
    src = "fun s(x) {\n  if (x > 0) {\n    return 1;\n  } else if (x < 0) {\n    return -1;\n  }\n  return 0;\n}\n"
    p = parse(src)
    outer = p.statements_at(2)[0]
    assert isinstance(outer.orelse[0], If)
    assert outer.orelse[0].line == 4
    assert pretty_print(p) == src


def test_pretty_print_reference_is_canonical():
    assert pretty_print(parse(STU_SRC)) == STU_SRC


def test_pretty_print_normalizes_layout():
    messy = "fun   sum(n){let s=0; let i=1;\nwhile(i<n){s=s+i;i=i+1;}\nreturn s;}"
    assert parse(pretty_print(parse(messy))) == parse(STU_SRC)


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                         generated round trips                            │
# ╰──────────────────────────────────────────────────────────────────────────╯
NAMES = ("a", "b", "acc", "x1")
OPS = ("||", "&&", "==", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/", "%")


class ProgramGenerator:
    def __init__(self, seed: int) -> None:
        self.rng = random.Random(seed)

    def expr(self, depth: int = 0):
        roll = self.rng.random()
        if depth > 2 or roll < 0.3:
            leaf = self.rng.randrange(5)
            if leaf == 0:
                return IntLit(self.rng.randrange(0, 1000))
            if leaf == 1:
                return BoolLit(self.rng.random() < 0.5)
            if leaf == 2:
                return StrLit(self.rng.choice(["", "go", 'say "hi"', "a\\b", "tab\tnl\n"]))
            return Var(self.rng.choice(NAMES))
        if roll < 0.45:
            return Unary(self.rng.choice("!-"), self.expr(depth + 1))
        if roll < 0.55:
            n = self.rng.randrange(3)
            return Call(self.rng.choice(["f0", "f1", "g"]), tuple(self.expr(depth + 1) for _ in range(n)))
        return Binary(self.rng.choice(OPS), self.expr(depth + 1), self.expr(depth + 1))

    def block(self, depth: int):
        return tuple(self.stmt(depth) for _ in range(self.rng.randrange(0 if depth else 1, 4)))

    def stmt(self, depth: int):
        kinds = ["let", "assign", "return", "print", "call"]
        if depth < 2:
            kinds += ["if", "while", "for"]
        kind = self.rng.choice(kinds)
        name = self.rng.choice(NAMES)
        if kind == "let":
            return Let(name, self.expr())
        if kind == "assign":
            return Assign(name, self.expr())
        if kind == "return":
            return Return(self.expr())
        if kind == "print":
            return Print(self.expr())
        if kind == "call":
            return ExprStmt(Call("g", (self.expr(),)))
        if kind == "while":
            return While(self.expr(), self.block(depth + 1))
        if kind == "for":
            return For(name, self.expr(), self.expr(), self.block(depth + 1))
        orelse = None
        pick = self.rng.random()
        if pick < 0.3:
            orelse = (self.stmt_if(depth + 1),) if depth < 1 else self.block(depth + 1) or None
        elif pick < 0.6:
            orelse = self.block(depth + 1) or None
        return If(self.expr(), self.block(depth + 1), orelse)

    def stmt_if(self, depth: int):
        return If(self.expr(), self.block(depth + 1), None)

    def program(self) -> Program:
        fns = []
        for i in range(self.rng.randrange(1, 3)):
            params = tuple(self.rng.sample(NAMES, self.rng.randrange(0, 3)))
            fns.append(FunctionDef(f"f{i}", params, self.block(0)))
        return Program(tuple(fns))


def test_round_trip_generated_programs():
    """parse(pretty_print(p)) == p for 1000 generated programs."""
    for seed in range(1000):
        p = ProgramGenerator(seed).program()
        text = pretty_print(p)
        assert parse(text) == p, text
        assert pretty_print(parse(text)) == text
