"""Name resolution and type checking for MTC."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import ast as A


class MtcTypeError(Exception):
    """Static error; ``kind`` is one of undeclared, mismatch, intrinsic, declaration."""

    def __init__(self, message: str, loc: A.Loc, kind: str = "mismatch"):
        self.loc = loc
        self.kind = kind
        super().__init__(f"{loc}: {message}")


@dataclass
class TypedProgram:
    program: A.Program
    globals: dict[str, A.MtcType]
    global_init: dict[str, int | bool]
    threads: dict[str, A.ThreadDef]
    locals: dict[str, dict[str, A.MtcType]] = field(default_factory=dict)

    @property
    def origin(self) -> str:
        return self.program.origin

    def thread_names(self) -> list[str]:
        return [t.name for t in self.program.threads]

    def type_of(self, func: str, name: str) -> A.MtcType:
        scope = self.locals.get(func, {})
        if name in scope:
            return scope[name]
        return self.globals[name]

    def is_global(self, func: str, name: str) -> bool:
        return name not in self.locals.get(func, {}) and name in self.globals


_ARITH = {"+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>"}
_COMPARE = {"<", "<=", ">", ">="}
_EQUALITY = {"==", "!="}
_LOGIC = {"&&", "||"}


def const_value(expr: A.Expr) -> Optional[int | bool]:
    """Value of a literal initializer, or None when it is not a constant."""
    if isinstance(expr, A.IntLit):
        return expr.value
    if isinstance(expr, A.BoolLit):
        return expr.value
    if isinstance(expr, A.Unary) and expr.op == "-":
        inner = const_value(expr.operand)
        if isinstance(inner, int) and not isinstance(inner, bool):
            return -inner
    return None


class _Checker:
    def __init__(self, program: A.Program):
        self.program = program
        self.globals: dict[str, A.MtcType] = {}
        self.global_init: dict[str, int | bool] = {}
        self.threads: dict[str, A.ThreadDef] = {}
        self.locals: dict[str, dict[str, A.MtcType]] = {}
        self.func = "main"
        self.scopes: list[dict[str, A.MtcType]] = []

    def run(self) -> TypedProgram:
        reserved = A.INTRINSICS | A.VALUE_INTRINSICS
        for decl in self.program.globals:
            if decl.name in reserved:
                raise MtcTypeError(f"{decl.name!r} is reserved", decl.loc, "declaration")
            if decl.name in self.globals:
                raise MtcTypeError(f"global {decl.name!r} redeclared", decl.loc, "declaration")
            self.globals[decl.name] = decl.type
            if decl.init is not None:
                value = const_value(decl.init)
                if value is None:
                    raise MtcTypeError(
                        "global initializer must be a literal", decl.init.loc, "declaration"
                    )
                want = A.BOOL if isinstance(value, bool) else A.INT
                if decl.type != want:
                    raise MtcTypeError(
                        f"cannot initialize {decl.type} {decl.name!r} with {want}",
                        decl.init.loc,
                    )
                self.expr(decl.init)
                self.global_init[decl.name] = value
        for thread in self.program.threads:
            if thread.name in self.globals or thread.name in reserved or thread.name == "main":
                raise MtcTypeError(f"thread name {thread.name!r} clashes", thread.loc, "declaration")
            if thread.name in self.threads:
                raise MtcTypeError(f"thread {thread.name!r} redefined", thread.loc, "declaration")
            self.threads[thread.name] = thread
        for thread in self.program.threads:
            self.func = thread.name
            self.locals[thread.name] = {}
            self.scopes = [{}]
            for param in thread.params:
                if param.type not in (A.INT, A.BOOL):
                    raise MtcTypeError(
                        "thread parameters must be int or bool", param.loc, "declaration"
                    )
                self.declare(param.name, param.type, param.loc)
            self.block(thread.body)
        self.func = "main"
        self.locals["main"] = {}
        self.scopes = [{}]
        self.block(self.program.main)
        return TypedProgram(
            self.program, self.globals, self.global_init, self.threads, self.locals
        )

    # -- scopes -------------------------------------------------------------

    def declare(self, name: str, ty: A.MtcType, loc: A.Loc) -> None:
        if name in A.INTRINSICS or name in A.VALUE_INTRINSICS or name in self.threads:
            raise MtcTypeError(f"{name!r} is reserved", loc, "declaration")
        if name in self.globals or name in self.locals[self.func]:
            raise MtcTypeError(f"{name!r} redeclared", loc, "declaration")
        self.locals[self.func][name] = ty
        self.scopes[-1][name] = ty

    def lookup(self, name: str, loc: A.Loc) -> A.MtcType:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        if name in self.globals:
            return self.globals[name]
        raise MtcTypeError(f"undeclared identifier {name!r}", loc, "undeclared")

    # -- statements ---------------------------------------------------------

    def block(self, block: A.Block) -> None:
        self.scopes.append({})
        for stmt in block.stmts:
            self.stmt(stmt)
        self.scopes.pop()

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.Block):
            self.block(s)
        elif isinstance(s, A.Atomic):
            self.block(s.body)
        elif isinstance(s, A.VarDecl):
            if s.type.kind in ("mutex", "cond"):
                raise MtcTypeError(
                    "synchronization objects must be global", s.loc, "declaration"
                )
            if s.init is not None:
                if s.type.kind in ("array", "thread_t"):
                    raise MtcTypeError(f"{s.type} cannot be initialized", s.loc, "declaration")
                self.expect(s.init, s.type)
            self.declare(s.name, s.type, s.loc)
        elif isinstance(s, A.Assign):
            ty = self.lvalue(s.target)
            self.expect(s.value, ty)
        elif isinstance(s, A.If):
            self.expect(s.cond, A.BOOL)
            self.scoped(s.then)
            if s.orelse is not None:
                self.scoped(s.orelse)
        elif isinstance(s, A.While):
            self.expect(s.cond, A.BOOL)
            self.scoped(s.body)
        elif isinstance(s, A.CallStmt):
            self.intrinsic(s)
        elif isinstance(s, A.Empty):
            pass
        else:  # pragma: no cover - parser never builds anything else
            raise MtcTypeError(f"unsupported statement {type(s).__name__}", s.loc)

    def scoped(self, s: A.Stmt) -> None:
        self.scopes.append({})
        self.stmt(s)
        self.scopes.pop()

    def lvalue(self, target: A.Expr) -> A.MtcType:
        if isinstance(target, A.Name):
            ty = self.lookup(target.ident, target.loc)
            if ty not in (A.INT, A.BOOL):
                raise MtcTypeError(f"cannot assign to {ty} {target.ident!r}", target.loc)
            target.ty = ty
            return ty
        if isinstance(target, A.Index):
            ty = self.lookup(target.base.ident, target.base.loc)
            if ty.kind != "array":
                raise MtcTypeError(f"{target.base.ident!r} is not an array", target.loc)
            target.base.ty = ty
            self.expect(target.index, A.INT)
            target.ty = A.INT
            return A.INT
        raise MtcTypeError("invalid assignment target", target.loc)

    def intrinsic(self, s: A.CallStmt) -> None:
        name, args = s.name, s.args

        def arity(n: int) -> None:
            if len(args) != n:
                raise MtcTypeError(
                    f"{name} takes {n} argument(s), got {len(args)}", s.loc, "intrinsic"
                )

        def sync_arg(expr: A.Expr, kind: str) -> None:
            if not isinstance(expr, A.Name):
                raise MtcTypeError(f"{name} expects a {kind} variable", expr.loc, "intrinsic")
            ty = self.lookup(expr.ident, expr.loc)
            if ty.kind != kind:
                raise MtcTypeError(
                    f"{name} expects a {kind}, {expr.ident!r} is {ty}", expr.loc, "intrinsic"
                )
            expr.ty = ty

        if name in ("assert", "assume"):
            arity(1)
            self.expect(args[0], A.BOOL)
        elif name in ("lock", "unlock"):
            arity(1)
            sync_arg(args[0], "mutex")
        elif name == "wait":
            arity(2)
            sync_arg(args[0], "cond")
            sync_arg(args[1], "mutex")
        elif name in ("signal", "broadcast"):
            arity(1)
            sync_arg(args[0], "cond")
        elif name == "join":
            arity(1)
            sync_arg(args[0], "thread_t")
        elif name in ("exit", "atomic_begin", "atomic_end"):
            arity(0)
        elif name == "create":
            if len(args) < 2:
                raise MtcTypeError("create needs a handle and a thread name", s.loc, "intrinsic")
            sync_arg(args[0], "thread_t")
            ref = args[1]
            if not isinstance(ref, A.Name) or ref.ident not in self.threads:
                raise MtcTypeError("create expects a thread name", ref.loc, "intrinsic")
            thread = self.threads[ref.ident]
            actuals = args[2:]
            if len(actuals) != len(thread.params):
                raise MtcTypeError(
                    f"thread {thread.name!r} takes {len(thread.params)} argument(s)",
                    s.loc,
                    "intrinsic",
                )
            for actual, param in zip(actuals, thread.params):
                self.expect(actual, param.type)
        else:
            raise MtcTypeError(f"unknown intrinsic {name!r}", s.loc, "intrinsic")

    # -- expressions --------------------------------------------------------

    def expect(self, e: A.Expr, ty: A.MtcType) -> None:
        got = self.expr(e)
        if got != ty:
            raise MtcTypeError(f"expected {ty}, found {got}", e.loc)

    def expr(self, e: A.Expr) -> A.MtcType:
        ty = self._expr(e)
        e.ty = ty
        return ty

    def _expr(self, e: A.Expr) -> A.MtcType:
        if isinstance(e, A.IntLit):
            return A.INT
        if isinstance(e, A.BoolLit):
            return A.BOOL
        if isinstance(e, A.Name):
            ty = self.lookup(e.ident, e.loc)
            if ty not in (A.INT, A.BOOL):
                raise MtcTypeError(f"{ty} {e.ident!r} cannot be used as a value", e.loc)
            return ty
        if isinstance(e, A.Index):
            return self.lvalue(e)
        if isinstance(e, A.Unary):
            if e.op == "!":
                self.expect(e.operand, A.BOOL)
                return A.BOOL
            self.expect(e.operand, A.INT)
            return A.INT
        if isinstance(e, A.Binary):
            if e.op in _LOGIC:
                self.expect(e.left, A.BOOL)
                self.expect(e.right, A.BOOL)
                return A.BOOL
            if e.op in _EQUALITY:
                lt = self.expr(e.left)
                rt = self.expr(e.right)
                if lt != rt:
                    raise MtcTypeError(f"cannot compare {lt} with {rt}", e.loc)
                return A.BOOL
            if e.op in _COMPARE:
                self.expect(e.left, A.INT)
                self.expect(e.right, A.INT)
                return A.BOOL
            if e.op in _ARITH:
                self.expect(e.left, A.INT)
                self.expect(e.right, A.INT)
                return A.INT
            raise MtcTypeError(f"unknown operator {e.op!r}", e.loc)
        if isinstance(e, A.Call):
            if e.name == "nondet_int":
                if e.args:
                    raise MtcTypeError("nondet_int takes no arguments", e.loc, "intrinsic")
                return A.INT
            if e.name == "nondet_bool":
                if e.args:
                    raise MtcTypeError("nondet_bool takes no arguments", e.loc, "intrinsic")
                return A.BOOL
            if e.name in A.INTRINSICS:
                raise MtcTypeError(f"{e.name} has no value", e.loc, "intrinsic")
            raise MtcTypeError(f"unknown function {e.name!r}", e.loc, "undeclared")
        if isinstance(e, A.AssignExpr):
            ty = self.lvalue(e.target)
            self.expect(e.value, ty)
            return ty
        raise MtcTypeError(f"unsupported expression {type(e).__name__}", e.loc)


def typecheck(program: A.Program) -> TypedProgram:
    """Resolve identifiers and annotate every expression with its type.

    The input tree is annotated in place and wrapped in a TypedProgram.
    """
    return _Checker(program).run()
