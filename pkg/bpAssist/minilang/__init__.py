# bpAssist/minilang/__init__.py

"""
MiniLang: the small imperative language every analysis runs on.
Lexer → parser → canonical printer, plus a tree-walking interpreter.
"""
from .interpreter import (
    DEFAULT_STEP_LIMIT, UNIT, Suite, TestCase, TestVerdict, VerdictStatus,
    load_suite, run_call, run_suite, run_test, suite_from_json, value_text,
)
from .lexer import Token, TokenKind, tokenize
from .nodes import Program
from .parser import parse
from .printer import pretty_print

__all__ = [
    "DEFAULT_STEP_LIMIT", "UNIT", "Program", "Suite", "TestCase", "TestVerdict",
    "Token", "TokenKind", "VerdictStatus", "load_suite", "parse", "pretty_print",
    "run_call", "run_suite", "run_test", "suite_from_json", "tokenize", "value_text",
]
