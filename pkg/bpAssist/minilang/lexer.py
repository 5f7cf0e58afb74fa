"""Regex-driven tokenizer for MiniLang."""
from __future__ import annotations

import re
from enum import Enum
from typing import List, NamedTuple

from ..errors import LexError


class TokenKind(str, Enum):
    IDENT = "identifier"
    INT = "int-literal"
    BOOL = "bool-literal"
    STRING = "string-literal"
    KEYWORD = "keyword"
    OPERATOR = "operator"
    PUNCT = "punctuation"


class Token(NamedTuple):
    kind: TokenKind
    lexeme: str
    line: int


KEYWORDS = {"fun", "let", "if", "else", "while", "for", "in", "return", "print"}
BOOLEANS = {"true", "false"}

TOKEN_SPEC = [
    ("COMMENT",  r"//[^\n]*"),
    ("NEWLINE",  r"\n"),
    ("SKIP",     r"[ \t\r]+"),
    ("STRING",   r'"(?:[^"\\\n]|\\.)*"'),
    ("OPEN_STR", r'"'),
    ("INT",      r"\d+"),
    ("IDENT",    r"[A-Za-z_][A-Za-z0-9_]*"),
    ("OP",       r"\.\.|==|!=|<=|>=|&&|\|\||[+\-*/%<>=!]"),
    ("PUNCT",    r"[(){},;]"),
    ("MISMATCH", r"."),
]

token_re = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in TOKEN_SPEC))


def tokenize(src: str) -> List[Token]:
    """Tokenize MiniLang source; comments and whitespace produce nothing."""
    tokens: List[Token] = []
    line = 1
    for mo in token_re.finditer(src):
        kind = mo.lastgroup
        value = mo.group()
        if kind == "NEWLINE":
            line += 1
        elif kind in ("SKIP", "COMMENT"):
            continue
        elif kind == "OPEN_STR":
            raise LexError(line, "unterminated string literal")
        elif kind == "MISMATCH":
            raise LexError(line, f"illegal character {value!r}")
        elif kind == "STRING":
            tokens.append(Token(TokenKind.STRING, value, line))
        elif kind == "INT":
            tokens.append(Token(TokenKind.INT, value, line))
        elif kind == "IDENT":
            if value in KEYWORDS:
                tokens.append(Token(TokenKind.KEYWORD, value, line))
            elif value in BOOLEANS:
                tokens.append(Token(TokenKind.BOOL, value, line))
            else:
                tokens.append(Token(TokenKind.IDENT, value, line))
        elif kind == "OP":
            tokens.append(Token(TokenKind.OPERATOR, value, line))
        else:
            tokens.append(Token(TokenKind.PUNCT, value, line))
    return tokens


def normalized_lines(src: str) -> List[str]:
    """Each source line reduced to its lexemes joined by single spaces."""
    by_line: dict[int, List[str]] = {}
    for tok in tokenize(src):
        by_line.setdefault(tok.line, []).append(tok.lexeme)
    total = src.count("\n") + 1
    return [" ".join(by_line.get(n, [])) for n in range(1, total + 1)]


def decode_string(lexeme: str) -> str:
    body = lexeme[1:-1]
    escapes = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}
    out, i = [], 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(escapes.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def encode_string(value: str) -> str:
    escaped = (value.replace("\\", "\\\\").replace('"', '\\"')
               .replace("\n", "\\n").replace("\t", "\\t"))
    return f'"{escaped}"'
