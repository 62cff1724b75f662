"""Syntax tree for MTC, the mini threaded language.

Node equality ignores source locations and inferred types, which is what the
parse/pretty-print round trip relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Loc:
    offset: int
    line: int
    col: int
    origin: str = "<inline>"

    def __str__(self) -> str:
        return f"{self.origin}:{self.line}:{self.col}"


NOLOC = Loc(0, 0, 0)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MtcType:
    """One of int, bool, int[N], mutex, cond, thread_t.

    The bit width of ``int`` is a run-time setting, not part of the type.
    """

    kind: str
    length: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in ("int", "bool", "array", "mutex", "cond", "thread_t"):
            raise ValueError(f"unknown type kind {self.kind!r}")
        if self.kind == "array" and (self.length is None or self.length < 1):
            raise ValueError("array length must be >= 1")

    def __str__(self) -> str:
        if self.kind == "array":
            return f"int[{self.length}]"
        return self.kind


INT = MtcType("int")
BOOL = MtcType("bool")
MUTEX = MtcType("mutex")
COND = MtcType("cond")
THREAD = MtcType("thread_t")


def array_of(n: int) -> MtcType:
    return MtcType("array", n)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(eq=True)
class Expr:
    loc: Loc = field(default=NOLOC, compare=False, repr=False, kw_only=True)
    ty: Optional[MtcType] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(eq=True)
class IntLit(Expr):
    value: int


@dataclass(eq=True)
class BoolLit(Expr):
    value: bool


@dataclass(eq=True)
class Name(Expr):
    ident: str


@dataclass(eq=True)
class Index(Expr):
    base: Name
    index: Expr


@dataclass(eq=True)
class Unary(Expr):
    op: str  # "-", "!", "~"
    operand: Expr


@dataclass(eq=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(eq=True)
class Call(Expr):
    """``nondet_int()`` / ``nondet_bool()`` used as a value."""

    name: str
    args: list[Expr]


@dataclass(eq=True)
class AssignExpr(Expr):
    """An assignment used as a value, e.g. inside a branch test."""

    target: Union[Name, Index]
    value: Expr


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(eq=True)
class Stmt:
    loc: Loc = field(default=NOLOC, compare=False, repr=False, kw_only=True)


@dataclass(eq=True)
class VarDecl(Stmt):
    type: MtcType
    name: str
    init: Optional[Expr] = None


@dataclass(eq=True)
class Assign(Stmt):
    target: Union[Name, Index]
    value: Expr


@dataclass(eq=True)
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt] = None


@dataclass(eq=True)
class While(Stmt):
    cond: Expr
    body: Stmt


@dataclass(eq=True)
class Block(Stmt):
    stmts: list[Stmt]


@dataclass(eq=True)
class Atomic(Stmt):
    body: Block


@dataclass(eq=True)
class CallStmt(Stmt):
    """Intrinsic call: assert, assume, lock, create, ..."""

    name: str
    args: list[Expr]


@dataclass(eq=True)
class Empty(Stmt):
    pass


# ---------------------------------------------------------------------------
# Top level
# ---------------------------------------------------------------------------


@dataclass(eq=True)
class GlobalDecl:
    type: MtcType
    name: str
    init: Optional[Expr] = None
    loc: Loc = field(default=NOLOC, compare=False, repr=False, kw_only=True)


@dataclass(eq=True)
class Param:
    type: MtcType
    name: str
    loc: Loc = field(default=NOLOC, compare=False, repr=False, kw_only=True)


@dataclass(eq=True)
class ThreadDef:
    name: str
    params: list[Param]
    body: Block
    loc: Loc = field(default=NOLOC, compare=False, repr=False, kw_only=True)


@dataclass(eq=True)
class Program:
    globals: list[GlobalDecl]
    threads: list[ThreadDef]
    main: Block
    origin: str = field(default="<inline>", compare=False)


INTRINSICS = frozenset(
    {
        "assert",
        "assume",
        "lock",
        "unlock",
        "wait",
        "signal",
        "broadcast",
        "create",
        "join",
        "exit",
        "atomic_begin",
        "atomic_end",
    }
)

VALUE_INTRINSICS = frozenset({"nondet_int", "nondet_bool"})
