"""MTC front end: lexing, parsing, type checking and pretty printing."""

from __future__ import annotations

from . import ast
from .parser import MtcSyntaxError, SourceProgram, parse
from .pretty import expr_str, pretty, stmt_str
from .typecheck import MtcTypeError, TypedProgram, typecheck


def load(src: SourceProgram | str, origin: str = "<inline>") -> TypedProgram:
    """Parse and type check in one go."""
    return typecheck(parse(src, origin))


__all__ = [
    "ast",
    "MtcSyntaxError",
    "MtcTypeError",
    "SourceProgram",
    "TypedProgram",
    "expr_str",
    "load",
    "parse",
    "pretty",
    "stmt_str",
    "typecheck",
]
