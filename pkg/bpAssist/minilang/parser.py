"""
Recursive-descent parser for MiniLang.

Grammar::

    program   := fundef+
    fundef    := "fun" IDENT "(" [IDENT ("," IDENT)*] ")" block
    block     := "{" stmt* "}"
    stmt      := "let" IDENT "=" expr ";" | IDENT "=" expr ";"
               | "if" "(" expr ")" block ["else" (block | ifstmt)]
               | "while" "(" expr ")" block
               | "for" "(" IDENT "in" expr ".." expr ")" block
               | "return" expr ";" | "print" "(" expr ")" ";" | call ";"

Expression precedence, loosest first: ``||``, ``&&``, comparisons,
``+ -``, ``* / %``, unary ``! -``, call/atom.
"""
from __future__ import annotations

from typing import List, Optional, Tuple

from ..errors import DuplicateFunction, ParseError
from .lexer import Token, TokenKind, decode_string, tokenize
from .nodes import (
    Assign, Binary, Block, BoolLit, Call, Expr, ExprStmt, For, FunctionDef, If,
    IntLit, Let, Print, Program, Return, Stmt, StrLit, Unary, Var, While,
)

INT_MAX = 2 ** 63 - 1

# binary precedence levels, loosest first
PRECEDENCE: List[Tuple[str, ...]] = [
    ("||",),
    ("&&",),
    ("==", "!=", "<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


def binding_power(op: str) -> int:
    for level, ops in enumerate(PRECEDENCE):
        if op in ops:
            return level
    raise KeyError(op)


class Parser:
    def __init__(self, tokens: List[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    # ------------------------------------------------------------ primitives
    def peek(self, offset: int = 0) -> Optional[Token]:
        idx = self.pos + offset
        return self.tokens[idx] if idx < len(self.tokens) else None

    def line(self) -> int:
        tok = self.peek()
        if tok is not None:
            return tok.line
        return self.tokens[-1].line if self.tokens else 1

    def at(self, lexeme: str, kind: Optional[TokenKind] = None) -> bool:
        tok = self.peek()
        if tok is None or tok.lexeme != lexeme:
            return False
        return kind is None or tok.kind == kind

    def fail(self, expected: str) -> ParseError:
        tok = self.peek()
        found = repr(tok.lexeme) if tok else "end of input"
        return ParseError(self.line(), expected, found)

    def expect(self, lexeme: str) -> Token:
        tok = self.peek()
        if tok is None or tok.lexeme != lexeme or tok.kind in (TokenKind.STRING, TokenKind.IDENT):
            raise self.fail(repr(lexeme))
        self.pos += 1
        return tok

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != TokenKind.IDENT:
            raise self.fail("identifier")
        self.pos += 1
        return tok

    # ---------------------------------------------------------- declarations
    def program(self) -> Tuple[FunctionDef, ...]:
        functions: List[FunctionDef] = []
        seen = set()
        if self.peek() is None:
            raise self.fail("'fun'")
        while self.peek() is not None:
            fn = self.fundef()
            if fn.name in seen:
                raise DuplicateFunction(fn.name)
            seen.add(fn.name)
            functions.append(fn)
        return tuple(functions)

    def fundef(self) -> FunctionDef:
        header = self.expect("fun")
        name = self.expect_ident().lexeme
        self.expect("(")
        params: List[str] = []
        if not self.at(")"):
            while True:
                tok = self.expect_ident()
                if tok.lexeme in params:
                    raise ParseError(tok.line, "distinct parameter names", repr(tok.lexeme))
                params.append(tok.lexeme)
                if not self.at(","):
                    break
                self.pos += 1
        self.expect(")")
        body = self.block()
        first = body[0].line if body else header.line + 1
        return FunctionDef(name, tuple(params), body, header_line=header.line, first_body_line=first)

    def block(self) -> Block:
        self.expect("{")
        stmts: List[Stmt] = []
        while not self.at("}", TokenKind.PUNCT):
            if self.peek() is None:
                raise self.fail("'}'")
            stmts.append(self.statement())
        self.expect("}")
        return tuple(stmts)

    # ------------------------------------------------------------ statements
    def statement(self) -> Stmt:
        tok = self.peek()
        line = tok.line
        if tok.kind == TokenKind.KEYWORD:
            word = tok.lexeme
            if word == "let":
                self.pos += 1
                name = self.expect_ident().lexeme
                self.expect("=")
                expr = self.expression()
                self.expect(";")
                return Let(name, expr, line=line)
            if word == "if":
                return self.if_statement()
            if word == "while":
                self.pos += 1
                self.expect("(")
                cond = self.expression()
                self.expect(")")
                return While(cond, self.block(), line=line)
            if word == "for":
                self.pos += 1
                self.expect("(")
                var = self.expect_ident().lexeme
                self.expect("in")
                start = self.expression()
                self.expect("..")
                stop = self.expression()
                self.expect(")")
                return For(var, start, stop, self.block(), line=line)
            if word == "return":
                self.pos += 1
                expr = self.expression()
                self.expect(";")
                return Return(expr, line=line)
            if word == "print":
                self.pos += 1
                self.expect("(")
                expr = self.expression()
                self.expect(")")
                self.expect(";")
                return Print(expr, line=line)
            raise self.fail("statement")
        nxt = self.peek(1)
        if tok.kind == TokenKind.IDENT and nxt is not None and nxt.lexeme == "=" \
                and nxt.kind == TokenKind.OPERATOR:
            self.pos += 2
            expr = self.expression()
            self.expect(";")
            return Assign(tok.lexeme, expr, line=line)
        expr = self.expression()
        if not isinstance(expr, Call):
            raise ParseError(line, "statement", "bare expression")
        self.expect(";")
        return ExprStmt(expr, line=line)

    def if_statement(self) -> If:
        line = self.expect("if").line
        self.expect("(")
        cond = self.expression()
        self.expect(")")
        then = self.block()
        orelse: Optional[Block] = None
        if self.at("else", TokenKind.KEYWORD):
            self.pos += 1
            if self.at("if", TokenKind.KEYWORD):
                orelse = (self.if_statement(),)
            else:
                orelse = self.block() or None
        return If(cond, then, orelse, line=line)

    # ----------------------------------------------------------- expressions
    def expression(self, level: int = 0) -> Expr:
        if level == len(PRECEDENCE):
            return self.unary()
        left = self.expression(level + 1)
        while True:
            tok = self.peek()
            if tok is None or tok.kind != TokenKind.OPERATOR or tok.lexeme not in PRECEDENCE[level]:
                return left
            self.pos += 1
            right = self.expression(level + 1)
            left = Binary(tok.lexeme, left, right, line=left.line)

    def unary(self) -> Expr:
        tok = self.peek()
        if tok is not None and tok.kind == TokenKind.OPERATOR and tok.lexeme in ("!", "-"):
            self.pos += 1
            return Unary(tok.lexeme, self.unary(), line=tok.line)
        return self.atom()

    def atom(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise self.fail("expression")
        if tok.kind == TokenKind.INT:
            self.pos += 1
            value = int(tok.lexeme)
            if value > INT_MAX:
                raise ParseError(tok.line, "64-bit integer literal", tok.lexeme)
            return IntLit(value, line=tok.line)
        if tok.kind == TokenKind.BOOL:
            self.pos += 1
            return BoolLit(tok.lexeme == "true", line=tok.line)
        if tok.kind == TokenKind.STRING:
            self.pos += 1
            return StrLit(decode_string(tok.lexeme), line=tok.line)
        if tok.kind == TokenKind.IDENT:
            self.pos += 1
            if self.at("(", TokenKind.PUNCT):
                self.pos += 1
                args: List[Expr] = []
                if not self.at(")", TokenKind.PUNCT):
                    while True:
                        args.append(self.expression())
                        if not self.at(",", TokenKind.PUNCT):
                            break
                        self.pos += 1
                self.expect(")")
                return Call(tok.lexeme, tuple(args), line=tok.line)
            return Var(tok.lexeme, line=tok.line)
        if tok.kind == TokenKind.PUNCT and tok.lexeme == "(":
            self.pos += 1
            inner = self.expression()
            self.expect(")")
            return inner
        raise self.fail("expression")


def parse(src: str) -> Program:
    """Parse MiniLang source into a line-annotated Program."""
    parser = Parser(tokenize(src))
    functions = parser.program()
    return Program(functions, source_lines=len(src.splitlines()))
