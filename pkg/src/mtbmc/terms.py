"""Hash-consed, sorted terms with simplifying constructors.

Sorts are ``BOOL`` or a positive int giving a bit-vector width.  Arrays never
reach this layer: symbolic execution expands them into one scalar per element.

Constructors fold constants and apply cheap local rewrites, which is what
drives enabledness pruning in the symbolic executor.  Structurally equal terms
are the same Python object, so ``is`` is term equality.
"""

from __future__ import annotations

import weakref
from typing import Callable, Iterable, Mapping, Optional, Union

from . import semantics as sem

BOOL = "bool"
Sort = Union[str, int]

BV_BINARY = (
    "bvadd",
    "bvsub",
    "bvmul",
    "bvsdiv",
    "bvsrem",
    "bvand",
    "bvor",
    "bvxor",
    "bvshl",
    "bvashr",
)
BV_UNARY = ("bvneg", "bvnot")
COMPARE = ("slt", "sle")


class Term:
    __slots__ = ("op", "args", "sort", "payload", "serial", "_hash", "__weakref__")

    op: str
    args: tuple["Term", ...]
    sort: Sort
    payload: object  # constant value or variable name

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return self is other

    def __repr__(self) -> str:
        return f"Term({to_str(self)})"

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    @property
    def is_var(self) -> bool:
        return self.op == "var"

    @property
    def value(self):
        if self.op != "const":
            raise ValueError("not a constant")
        return self.payload

    @property
    def name(self) -> str:
        if self.op != "var":
            raise ValueError("not a variable")
        return self.payload  # type: ignore[return-value]

    @property
    def width(self) -> int:
        if self.sort == BOOL:
            raise ValueError("bool term has no width")
        return self.sort  # type: ignore[return-value]

    def is_true(self) -> bool:
        return self.op == "const" and self.payload is True

    def is_false(self) -> bool:
        return self.op == "const" and self.payload is False


_table: "weakref.WeakValueDictionary[tuple, Term]" = weakref.WeakValueDictionary()
_serial = 0


def _mk(op: str, args: tuple[Term, ...], sort: Sort, payload: object = None) -> Term:
    global _serial
    key = (op, tuple(id(a) for a in args), sort, type(payload).__name__, payload)
    hit = _table.get(key)
    if hit is not None:
        return hit
    t = Term.__new__(Term)
    t.op = op
    t.args = args
    t.sort = sort
    t.payload = payload
    _serial += 1
    t.serial = _serial
    t._hash = hash(key)
    _table[key] = t
    return t


# ---------------------------------------------------------------------------
# Leaves
# ---------------------------------------------------------------------------


def BoolConst(v: bool) -> Term:
    return _mk("const", (), BOOL, bool(v))


TRUE = BoolConst(True)
FALSE = BoolConst(False)


def BvConst(v: int, width: int) -> Term:
    if width < 1:
        raise ValueError("bit width must be >= 1")
    return _mk("const", (), width, sem.wrap(v, width))


def Var(name: str, sort: Sort) -> Term:
    if sort != BOOL and (not isinstance(sort, int) or sort < 1):
        raise ValueError(f"bad sort {sort!r}")
    return _mk("var", (), sort, name)


# keep the two boolean constants alive for the lifetime of the process
_PINNED = (TRUE, FALSE)


# ---------------------------------------------------------------------------
# Boolean structure
# ---------------------------------------------------------------------------


def _check_bool(*ts: Term) -> None:
    for t in ts:
        if t.sort != BOOL:
            raise TypeError(f"expected bool term, got sort {t.sort}")


def Not(a: Term) -> Term:
    _check_bool(a)
    if a.op == "const":
        return BoolConst(not a.payload)
    if a.op == "not":
        return a.args[0]
    return _mk("not", (a,), BOOL)


def And(*xs: Term) -> Term:
    return _nary("and", xs, absorbing=FALSE, unit=TRUE)


def Or(*xs: Term) -> Term:
    return _nary("or", xs, absorbing=TRUE, unit=FALSE)


def _nary(op: str, xs: Iterable[Term], absorbing: Term, unit: Term) -> Term:
    flat: list[Term] = []
    seen: set[int] = set()
    stack = list(xs)
    stack.reverse()
    while stack:
        x = stack.pop()
        _check_bool(x)
        if x is absorbing:
            return absorbing
        if x is unit:
            continue
        if x.op == op:
            stack.extend(reversed(x.args))
            continue
        if id(x) in seen:
            continue
        seen.add(id(x))
        flat.append(x)
    ids = seen
    for x in flat:
        if x.op == "not" and id(x.args[0]) in ids:
            return absorbing
    if not flat:
        return unit
    if len(flat) == 1:
        return flat[0]
    return _mk(op, tuple(flat), BOOL)


def Implies(a: Term, b: Term) -> Term:
    return Or(Not(a), b)


def Ite(c: Term, a: Term, b: Term) -> Term:
    _check_bool(c)
    if a.sort != b.sort:
        raise TypeError(f"ite branches differ in sort: {a.sort} vs {b.sort}")
    if c.op == "const":
        return a if c.payload else b
    if a is b:
        return a
    if c.op == "not":
        return Ite(c.args[0], b, a)
    # ite(c, ite(c, x, y), z) -> ite(c, x, z) and the mirror image
    if a.op == "ite" and a.args[0] is c:
        return Ite(c, a.args[1], b)
    if b.op == "ite" and b.args[0] is c:
        return Ite(c, a, b.args[2])
    if a.sort == BOOL:
        if a.op == "const":
            return Or(c, b) if a.payload else And(Not(c), b)
        if b.op == "const":
            return Or(Not(c), a) if b.payload else And(c, a)
    return _mk("ite", (c, a, b), a.sort)


def Eq(a: Term, b: Term) -> Term:
    if a.sort != b.sort:
        raise TypeError(f"equality between sorts {a.sort} and {b.sort}")
    if a is b:
        return TRUE
    if a.op == "const" and b.op == "const":
        return BoolConst(a.payload == b.payload)
    if a.sort == BOOL:
        if a.op == "const":
            return b if a.payload else Not(b)
        if b.op == "const":
            return a if b.payload else Not(a)
    # canonical argument order keeps x=y and y=x the same node
    if b.op == "const" or (a.op != "const" and b.serial < a.serial):
        a, b = b, a
    return _mk("eq", (a, b), BOOL)


def Ne(a: Term, b: Term) -> Term:
    return Not(Eq(a, b))


# ---------------------------------------------------------------------------
# Bit-vector arithmetic
# ---------------------------------------------------------------------------


def eval_binary(op: str, a: int, b: int, width: int) -> int:
    """Concrete value of a bit-vector operator.

    Division by zero follows the SMT-LIB convention, which is also what the
    gate-level divider computes: ``a / 0`` is -1 for ``a >= 0`` and 1
    otherwise, and ``a % 0`` is ``a``.
    """
    if op == "bvsdiv" and b == 0:
        return 1 if a < 0 else -1
    if op == "bvsrem" and b == 0:
        return a
    return sem.BINARY[op](a, b, width)


def BvBin(op: str, a: Term, b: Term) -> Term:
    if op not in BV_BINARY:
        raise ValueError(f"unknown bit-vector operator {op!r}")
    if a.sort == BOOL or a.sort != b.sort:
        raise TypeError(f"{op} needs two bit-vectors of equal width")
    w = a.width
    if a.op == "const" and b.op == "const":
        return BvConst(eval_binary(op, a.payload, b.payload, w), w)
    zero = BvConst(0, w)
    if op in ("bvadd", "bvor", "bvxor"):
        if a is zero:
            return b
        if b is zero:
            return a
    if op in ("bvsub", "bvshl", "bvashr") and b is zero:
        return a
    if op in ("bvsub", "bvxor") and a is b:
        return zero
    if op in ("bvand", "bvor") and a is b:
        return a
    if op in ("bvmul", "bvand") and (a is zero or b is zero):
        return zero
    if op == "bvmul":
        one = BvConst(1, w)
        if a is one:
            return b
        if b is one:
            return a
    if op == "bvsdiv" and b is BvConst(1, w):
        return a
    if op in ("bvadd", "bvmul", "bvand", "bvor", "bvxor") and (
        a.op == "const" or (b.op != "const" and b.serial < a.serial)
    ):
        a, b = b, a  # commutative: constants last, stable order otherwise
    return _mk(op, (a, b), w)


def BvUn(op: str, a: Term) -> Term:
    if op not in BV_UNARY:
        raise ValueError(f"unknown bit-vector operator {op!r}")
    if a.sort == BOOL:
        raise TypeError(f"{op} needs a bit-vector")
    if a.op == "const":
        return BvConst(sem.UNARY[op](a.payload, a.width), a.width)
    if a.op == op:
        return a.args[0]
    return _mk(op, (a,), a.sort)


def Slt(a: Term, b: Term) -> Term:
    return _cmp("slt", a, b)


def Sle(a: Term, b: Term) -> Term:
    return _cmp("sle", a, b)


def _cmp(op: str, a: Term, b: Term) -> Term:
    if a.sort == BOOL or a.sort != b.sort:
        raise TypeError(f"{op} needs two bit-vectors of equal width")
    if a.op == "const" and b.op == "const":
        return BoolConst(a.payload < b.payload if op == "slt" else a.payload <= b.payload)
    if a is b:
        return BoolConst(op == "sle")
    return _mk(op, (a, b), BOOL)


def Add(a: Term, b: Term) -> Term:
    return BvBin("bvadd", a, b)


def Sub(a: Term, b: Term) -> Term:
    return BvBin("bvsub", a, b)


# ---------------------------------------------------------------------------
# Traversal
# ---------------------------------------------------------------------------


def postorder(roots: Iterable[Term]) -> list[Term]:
    """All distinct subterms, children before parents, deterministic order."""
    out: list[Term] = []
    seen: set[int] = set()
    for root in roots:
        if id(root) in seen:
            continue
        stack: list[tuple[Term, bool]] = [(root, False)]
        while stack:
            t, expanded = stack.pop()
            if expanded:
                out.append(t)
                continue
            if id(t) in seen:
                continue
            seen.add(id(t))
            stack.append((t, True))
            for arg in reversed(t.args):
                if id(arg) not in seen:
                    stack.append((arg, False))
    return out


def free_vars(roots: Iterable[Term]) -> list[Term]:
    return [t for t in postorder(roots) if t.op == "var"]


def substitute(root: Term, mapping: Mapping[Term, Term]) -> Term:
    """Replace variables (or any subterm) and rebuild through the constructors."""
    cache: dict[int, Term] = {}
    for t in postorder([root]):
        if t in mapping:
            cache[id(t)] = mapping[t]
            continue
        if not t.args:
            cache[id(t)] = t
            continue
        cache[id(t)] = rebuild(t, [cache[id(a)] for a in t.args])
    return cache[id(root)]


def rebuild(t: Term, args: list[Term]) -> Term:
    op = t.op
    if op == "not":
        return Not(args[0])
    if op == "and":
        return And(*args)
    if op == "or":
        return Or(*args)
    if op == "ite":
        return Ite(*args)
    if op == "eq":
        return Eq(*args)
    if op in COMPARE:
        return _cmp(op, *args)
    if op in BV_BINARY:
        return BvBin(op, *args)
    if op in BV_UNARY:
        return BvUn(op, args[0])
    raise ValueError(f"cannot rebuild {op}")


def evaluate(
    root: Term,
    env: Mapping[str, Union[int, bool]],
    default: Optional[Callable[[Term], Union[int, bool]]] = None,
) -> Union[int, bool]:
    """Concrete value of ``root`` under an assignment of variable names."""
    vals: dict[int, Union[int, bool]] = {}
    for t in postorder([root]):
        op = t.op
        if op == "const":
            v = t.payload
        elif op == "var":
            if t.payload in env:
                v = env[t.payload]
            elif default is not None:
                v = default(t)
            else:
                raise KeyError(f"no value for variable {t.payload}")
            if t.sort != BOOL:
                v = sem.wrap(int(v), t.sort)  # type: ignore[arg-type]
            else:
                v = bool(v)
        else:
            xs = [vals[id(a)] for a in t.args]
            if op == "not":
                v = not xs[0]
            elif op == "and":
                v = all(xs)
            elif op == "or":
                v = any(xs)
            elif op == "ite":
                v = xs[1] if xs[0] else xs[2]
            elif op == "eq":
                v = xs[0] == xs[1]
            elif op == "slt":
                v = xs[0] < xs[1]
            elif op == "sle":
                v = xs[0] <= xs[1]
            elif op in BV_BINARY:
                v = eval_binary(op, xs[0], xs[1], t.sort)  # type: ignore[arg-type]
            elif op in BV_UNARY:
                v = sem.UNARY[op](xs[0], t.sort)  # type: ignore[arg-type]
            else:
                raise ValueError(f"cannot evaluate {op}")
        vals[id(t)] = v
    return vals[id(root)]


_INFIX = {
    "bvadd": "+",
    "bvsub": "-",
    "bvmul": "*",
    "bvsdiv": "/",
    "bvsrem": "%",
    "bvand": "&",
    "bvor": "|",
    "bvxor": "^",
    "bvshl": "<<",
    "bvashr": ">>",
    "slt": "<",
    "sle": "<=",
    "eq": "==",
}


def to_str(t: Term, limit: int = 400) -> str:
    """Human-readable infix rendering, truncated for very large terms."""
    parts: list[str] = []
    budget = [limit]

    def go(u: Term) -> None:
        if budget[0] <= 0:
            return
        if u.op == "const":
            s = ("true" if u.payload else "false") if u.sort == BOOL else str(u.payload)
            parts.append(s)
        elif u.op == "var":
            parts.append(str(u.payload))
        elif u.op == "not":
            parts.append("!")
            go(u.args[0])
        elif u.op in ("and", "or"):
            sep = " && " if u.op == "and" else " || "
            parts.append("(")
            for i, a in enumerate(u.args):
                if i:
                    parts.append(sep)
                go(a)
            parts.append(")")
        elif u.op == "ite":
            parts.append("ite(")
            for i, a in enumerate(u.args):
                if i:
                    parts.append(", ")
                go(a)
            parts.append(")")
        elif u.op in BV_UNARY:
            parts.append("-" if u.op == "bvneg" else "~")
            go(u.args[0])
        else:
            parts.append("(")
            go(u.args[0])
            parts.append(f" {_INFIX[u.op]} ")
            go(u.args[1])
            parts.append(")")
        budget[0] -= len(parts[-1])

    go(t)
    s = "".join(parts)
    return s if budget[0] > 0 else s + "..."
