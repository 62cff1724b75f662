"""Explicit-state reference interpreter working directly on the typed AST.

It shares no code with the unroller, the symbolic executor or the encoders,
so agreement between the two is a meaningful check.  Every reachable state
is enumerated: each thread may be scheduled before any of its statements,
every nondet call takes every value at the configured width, and loops are
cut after ``unwind`` iterations exactly like the bounded model.

Scheduling granularity follows the checker: a step evaluates the pending
branch and loop conditions of one thread and then executes a single
state-changing statement.  Consecutive statements inside ``atomic`` run in
one step.  ``lock`` blocks while the mutex is held, ``signal`` wakes every
current waiter, and a state where no live thread can move is a deadlock.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Union

from . import semantics as sem
from .frontend import ast as A
from .frontend.typecheck import TypedProgram

Value = Union[int, bool]

REAL = "VIOLATED"


class OracleError(Exception):
    """The program uses something the reference interpreter refuses to model."""


@dataclass
class OracleResult:
    verdict: str  # SAFE | VIOLATED | BOUND-INSUFFICIENT
    tags: set[str] = field(default_factory=set)
    states: int = 0


@dataclass(frozen=True)
class _Th:
    func: str
    cont: tuple  # work items, next item last
    env: tuple  # sorted (local name, value) pairs
    aliases: tuple  # (param, global key) for mutex and cond parameters
    status: tuple = ("run",)
    atomic: int = 0


@dataclass(frozen=True)
class _St:
    store: tuple  # sorted (key, value) pairs for globals, array cells, mutex bits
    threads: tuple

    def key(self) -> tuple:
        ths = tuple(
            (t.func, tuple(_item_key(i) for i in t.cont), t.env, t.aliases, t.status, t.atomic) for t in self.threads
        )
        return (self.store, ths)


def _item_key(item: tuple) -> tuple:
    return tuple(id(x) if isinstance(x, (A.Stmt, A.Expr)) else x for x in item)


class _Dead(Exception):
    """The path is cut by an assumption or the loop bound."""


class _Violation(Exception):
    def __init__(self, tag: str):
        super().__init__(tag)
        self.tag = tag


class _Frame:
    """Mutable working copy of one thread during a step."""

    def __init__(self, st: _St, tid: int, oracle: "Oracle"):
        self.o = oracle
        self.store = dict(st.store)
        self.threads = list(st.threads)
        self.tid = tid
        th = st.threads[tid]
        self.cont = list(th.cont)
        self.env = dict(th.env)
        self.aliases = dict(th.aliases)
        self.status = th.status
        self.atomic = th.atomic
        self.feed: list[Value] = []

    def freeze(self) -> _St:
        self.threads[self.tid] = _Th(
            self.threads[self.tid].func,
            tuple(self.cont),
            tuple(sorted(self.env.items())),
            tuple(sorted(self.aliases.items())),
            self.status,
            self.atomic,
        )
        return _St(tuple(sorted(self.store.items())), tuple(self.threads))

    # -- values -----------------------------------------------------------

    def _local(self, name: str) -> bool:
        return name in self.env

    def read(self, name: str) -> Value:
        if name in self.env:
            return self.env[name]
        return self.store[name]

    def write(self, name: str, v: Value) -> None:
        if name in self.env:
            self.env[name] = v
        else:
            self.store[name] = v

    def ref(self, name: str) -> str:
        """Global key for a mutex or cond name."""
        if name in self.aliases:
            return self.aliases[name]
        if name in self.env:
            return f"T{self.tid}.{name}"
        return name

    def cell(self, base: str, i: int) -> Optional[str]:
        n = self.o.length(self.threads[self.tid].func, base)
        if not 0 <= i < n:
            return None
        return f"T{self.tid}.{base}[{i}]" if self._local_array(base) else f"{base}[{i}]"

    def _local_array(self, base: str) -> bool:
        return base in self.o.typed.locals.get(self.threads[self.tid].func, {})

    def eval(self, e: A.Expr) -> Value:
        w = self.o.width
        if isinstance(e, A.IntLit):
            return sem.wrap(e.value, w)
        if isinstance(e, A.BoolLit):
            return e.value
        if isinstance(e, A.Name):
            return self.read(e.ident)
        if isinstance(e, A.Index):
            key = self.cell(e.base.ident, int(self.eval(e.index)))
            return 0 if key is None else self.store[key]
        if isinstance(e, A.Unary):
            x = self.eval(e.operand)
            if e.op == "!":
                return not x
            return sem.neg(x, w) if e.op == "-" else sem.bvnot(x, w)
        if isinstance(e, A.Call):
            if not self.feed:
                raise OracleError("nondet value supply exhausted")
            return self.feed.pop(0)
        if isinstance(e, A.Binary):
            a = self.eval(e.left)
            b = self.eval(e.right)
            return _binary(e.op, a, b, w)
        raise OracleError(f"unsupported expression {type(e).__name__}")

    def assign(self, target: A.Expr, v: Value) -> None:
        if isinstance(target, A.Name):
            self.write(target.ident, v)
            return
        assert isinstance(target, A.Index)
        key = self.cell(target.base.ident, int(self.eval(target.index)))
        if key is not None:
            self.store[key] = v  # writes outside the array are dropped


def _binary(op: str, a: Value, b: Value, w: int) -> Value:
    if op in ("/", "%"):
        if b == 0:
            raise OracleError("division by zero is outside the oracle's fragment")
        return sem.sdiv(a, b, w) if op == "/" else sem.srem(a, b, w)
    arith = {
        "+": sem.add,
        "-": sem.sub,
        "*": sem.mul,
        "&": sem.bvand,
        "|": sem.bvor,
        "^": sem.bvxor,
        "<<": sem.shl,
        ">>": sem.ashr,
    }
    if op in arith:
        return arith[op](a, b, w)
    if op == "&&":
        return bool(a) and bool(b)
    if op == "||":
        return bool(a) or bool(b)
    return {
        "==": a == b,
        "!=": a != b,
        "<": a < b,
        "<=": a <= b,
        ">": a > b,
        ">=": a >= b,
    }[op]


def _calls(e: Optional[A.Expr]) -> list[A.Call]:
    if e is None:
        return []
    if isinstance(e, A.Call):
        return [e]
    if isinstance(e, A.Index):
        return _calls(e.index)
    if isinstance(e, A.Unary):
        return _calls(e.operand)
    if isinstance(e, A.Binary):
        return _calls(e.left) + _calls(e.right)
    if isinstance(e, A.AssignExpr):
        raise OracleError("assignment expressions are outside the oracle's fragment")
    return []


class Oracle:
    def __init__(self, typed: TypedProgram, unwind: int, width: int, unwinding_assertions: bool = True):
        if width > 8:
            raise OracleError("explicit enumeration is limited to widths up to 8")
        self.typed = typed
        self.unwind = unwind
        self.width = width
        self.unwinding_assertions = unwinding_assertions
        self.tags: set[str] = set()

    def length(self, func: str, base: str) -> int:
        return self.typed.type_of(func, base).length or 0

    def _values(self, call: A.Call) -> list[Value]:
        if call.name == "nondet_bool":
            return [False, True]
        half = 1 << (self.width - 1)
        return list(range(-half, half))

    # -- initial state ------------------------------------------------------

    def _init(self, store: dict, key: str, ty: A.MtcType, init=None) -> None:
        if ty.kind == "array":
            for i in range(ty.length or 0):
                store[f"{key}[{i}]"] = 0
        elif ty.kind == "mutex":
            store[f"{key}.held"] = False
        elif ty.kind == "cond":
            pass
        elif ty.kind == "thread_t":
            store[key] = -1
        elif ty.kind == "bool":
            store[key] = bool(init) if init is not None else False
        else:
            store[key] = sem.wrap(int(init), self.width) if init is not None else 0

    def initial(self) -> _St:
        store: dict = {}
        for name, ty in self.typed.globals.items():
            self._init(store, name, ty, self.typed.global_init.get(name))
        main = _Th("main", (("s", self.typed.program.main),), (), ())
        return _St(tuple(sorted(store.items())), (main,))

    # -- stepping -------------------------------------------------------------

    def schedulable(self, st: _St, tid: int) -> bool:
        th = st.threads[tid]
        s = th.status
        if s[0] == "done":
            return False
        if s[0] == "lock":
            return not dict(st.store)[f"{s[1]}.held"]
        if s[0] == "cond":
            return False
        if s[0] == "join":
            return st.threads[s[1]].status[0] == "done"
        return True

    def step(self, st: _St, tid: int) -> Iterator[_St]:
        """All successor states of one step of ``tid``; raises on violations."""
        fr = _Frame(st, tid, self)
        yield from self._resume(fr)

    def _resume(self, fr: _Frame) -> Iterator[_St]:
        s = fr.status
        if s[0] == "lock":
            fr.store[f"{s[1]}.held"] = True
            fr.status = ("run",)
            yield from self._after(fr)
        elif s[0] == "join":
            fr.status = ("run",)
            yield from self._after(fr)
        elif s[0] == "woken":
            fr.status = ("run",)
            fr.cont.append(("lock", s[1]))
            yield from self._after(fr)
        else:
            yield from self._run(fr, first=True)

    def _after(self, fr: _Frame) -> Iterator[_St]:
        """End the step, or keep going when still inside an atomic section."""
        if fr.atomic > 0 and fr.status == ("run",):
            yield from self._run(fr, first=False, depth=fr.atomic)
            return
        if not fr.cont and fr.status == ("run",):
            self._exit(fr)
        yield fr.freeze()

    def _exit(self, fr: _Frame) -> None:
        fr.status = ("done",)
        fr.atomic = 0

    def _run(self, fr: _Frame, first: bool, depth: int = 0) -> Iterator[_St]:
        """Evaluate control items up to the next action and execute it."""
        while fr.cont:
            item = fr.cont[-1]
            kind = item[0]
            if kind == "aend":
                fr.cont.pop()
                fr.atomic -= 1
                continue
            if kind == "loop":
                fr.cont.pop()
                _, w, n = item
                if self._cond(fr, w.cond):
                    if n >= self.unwind:
                        if self.unwinding_assertions:
                            raise _Violation("unwinding")
                        raise _Dead()
                    fr.cont.append(("loop", w, n + 1))
                    fr.cont.append(("s", w.body))
                continue
            if kind == "s":
                stmt = item[1]
                if isinstance(stmt, A.Block):
                    fr.cont.pop()
                    fr.cont.extend(("s", x) for x in reversed(stmt.stmts))
                    continue
                if isinstance(stmt, A.Empty):
                    fr.cont.pop()
                    continue
                if isinstance(stmt, A.Atomic):
                    fr.cont.pop()
                    fr.atomic += 1
                    fr.cont.append(("aend",))
                    fr.cont.append(("s", stmt.body))
                    continue
                if isinstance(stmt, A.If):
                    fr.cont.pop()
                    if self._cond(fr, stmt.cond):
                        fr.cont.append(("s", stmt.then))
                    elif stmt.orelse is not None:
                        fr.cont.append(("s", stmt.orelse))
                    continue
                if isinstance(stmt, A.While):
                    fr.cont.pop()
                    fr.cont.append(("loop", stmt, 0))
                    continue
            # an action: it either belongs to this step or starts the next one
            if not first and not (depth > 0 and fr.atomic > 0):
                yield fr.freeze()
                return
            fr.cont.pop()
            yield from self._act(fr, item)
            return
        # ran off the end of the thread
        if first:
            self._exit(fr)
        elif fr.status == ("run",):
            self._exit(fr)
        yield fr.freeze()

    def _cond(self, fr: _Frame, e: A.Expr) -> bool:
        if _calls(e):
            raise OracleError("nondet calls in conditions are outside the oracle's fragment")
        return bool(fr.eval(e))

    def _act(self, fr: _Frame, item: tuple) -> Iterator[_St]:
        if item[0] == "lock":
            self._lock(fr, item[1])
            yield from self._after(fr)
            return
        stmt = item[1]
        exprs = self._exprs(stmt)
        calls = [c for e in exprs for c in _calls(e)]
        if not calls:
            self._exec(fr, stmt)
            yield from self._after(fr)
            return
        snapshot = fr.freeze()
        for combo in itertools.product(*(self._values(c) for c in calls)):
            sub = _Frame(snapshot, fr.tid, self)
            sub.feed = list(combo)
            try:
                self._exec(sub, stmt)
                yield from list(self._after(sub))
            except _Violation as v:
                self.tags.add(v.tag)  # sibling values are still explored
            except _Dead:
                pass

    @staticmethod
    def _exprs(stmt: A.Stmt) -> list[A.Expr]:
        if isinstance(stmt, A.Assign):
            return [stmt.target, stmt.value]
        if isinstance(stmt, A.VarDecl):
            return [stmt.init] if stmt.init is not None else []
        if isinstance(stmt, A.CallStmt):
            return [a for a in stmt.args if not isinstance(a, A.Name)]
        return []

    def _lock(self, fr: _Frame, key: str) -> None:
        if fr.store[f"{key}.held"]:
            fr.status = ("lock", key)
        else:
            fr.store[f"{key}.held"] = True

    def _exec(self, fr: _Frame, stmt: A.Stmt) -> None:
        if isinstance(stmt, A.Assign):
            v = fr.eval(stmt.value)
            fr.assign(stmt.target, v)
            return
        if isinstance(stmt, A.VarDecl):
            ty = stmt.type
            if ty.kind in ("int", "bool"):
                if stmt.init is not None:
                    v = fr.eval(stmt.init)
                else:
                    v = False if ty.kind == "bool" else 0
                fr.env[stmt.name] = v
            elif ty.kind == "thread_t":
                fr.env[stmt.name] = -1
            else:
                fresh: dict = {}
                self._init(fresh, f"T{fr.tid}.{stmt.name}", ty)
                fr.store.update(fresh)
                fr.env.setdefault(stmt.name, 0)  # marks the name as local
            return
        if not isinstance(stmt, A.CallStmt):
            raise OracleError(f"unsupported statement {type(stmt).__name__}")
        name, args = stmt.name, stmt.args
        if name == "assert":
            if not fr.eval(args[0]):
                raise _Violation("assertion")
        elif name == "assume":
            if not fr.eval(args[0]):
                raise _Dead()
        elif name == "lock":
            self._lock(fr, fr.ref(args[0].ident))  # type: ignore[attr-defined]
        elif name == "unlock":
            key = fr.ref(args[0].ident)  # type: ignore[attr-defined]
            if not fr.store[f"{key}.held"]:
                raise _Violation("bad-unlock")
            fr.store[f"{key}.held"] = False
        elif name == "wait":
            c = fr.ref(args[0].ident)  # type: ignore[attr-defined]
            m = fr.ref(args[1].ident)  # type: ignore[attr-defined]
            if not fr.store[f"{m}.held"]:
                raise _Violation("bad-wait")
            fr.store[f"{m}.held"] = False
            fr.status = ("cond", c, m)
        elif name in ("signal", "broadcast"):
            c = fr.ref(args[0].ident)  # type: ignore[attr-defined]
            for i, th in enumerate(fr.threads):
                if i != fr.tid and th.status[0] == "cond" and th.status[1] == c:
                    fr.threads[i] = replace(th, status=("woken", th.status[2]))
        elif name == "create":
            self._create(fr, stmt)
        elif name == "join":
            target = fr.eval(args[0])
            if not (isinstance(target, int) and 0 <= target < len(fr.threads)):
                raise OracleError(f"join on unknown thread {target}")
            if fr.threads[target].status[0] != "done":
                fr.status = ("join", target)
        elif name == "exit":
            fr.cont.clear()
        elif name in ("atomic_begin", "atomic_end"):
            fr.atomic += 1 if name == "atomic_begin" else -1
        else:
            raise OracleError(f"unsupported intrinsic {name}")

    def _create(self, fr: _Frame, stmt: A.CallStmt) -> None:
        func = stmt.args[1].ident  # type: ignore[attr-defined]
        tdef = self.typed.threads[func]
        env: dict = {}
        aliases: dict = {}
        for p, a in zip(tdef.params, stmt.args[2:]):
            if p.type.kind in ("mutex", "cond"):
                aliases[p.name] = fr.ref(a.ident)  # type: ignore[attr-defined]
            else:
                env[p.name] = fr.eval(a)
        tid = len(fr.threads)
        fr.threads.append(
            _Th(func, (("s", tdef.body),), tuple(sorted(env.items())), tuple(sorted(aliases.items())))
        )
        fr.assign(stmt.args[0], tid)

    # -- search -----------------------------------------------------------------

    def run(self, max_states: int = 200_000) -> OracleResult:
        res = OracleResult("SAFE", self.tags)
        seen: set = set()
        stack = [self.initial()]
        while stack:
            st = stack.pop()
            k = st.key()
            if k in seen:
                continue
            seen.add(k)
            if len(seen) > max_states:
                raise OracleError("state space exceeds the exploration cap")
            live = [i for i, t in enumerate(st.threads) if t.status[0] != "done"]
            movable = [i for i in live if self.schedulable(st, i)]
            if live and not movable:
                res.tags.add("deadlock")
                continue
            for tid in movable:
                try:
                    stack.extend(list(self.step(st, tid)))
                except _Violation as v:
                    res.tags.add(v.tag)
                except _Dead:
                    pass
        res.states = len(seen)
        real = res.tags - {"unwinding"}
        if real:
            res.verdict = REAL
        elif res.tags:
            res.verdict = "BOUND-INSUFFICIENT"
        return res


def check(typed: TypedProgram, unwind: int = 3, width: int = 4, unwinding_assertions: bool = True) -> OracleResult:
    """Explore every reachable state of ``typed`` and classify the outcome."""
    return Oracle(typed, unwind, width, unwinding_assertions).run()
