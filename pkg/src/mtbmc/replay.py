"""Concrete re-execution of a counterexample over the unrolled thread graphs.

The replayer knows nothing about terms or guards: it follows each thread's
graph with concrete values, taking branch decisions itself, and checks that
the statements it reaches are exactly the ones listed in the trace.  Nondet
values are consumed in evaluation order.  At the end it reports which
violations it actually observed, which lets a caller confirm that a decoded
counterexample is real.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import semantics as sem
from .cfg import NodeKind, ProgramCfg
from .frontend import ast as A

Value = Union[int, bool]


class ReplayError(Exception):
    """The trace does not describe a feasible concrete execution."""


@dataclass
class ReplayStep:
    tid: int
    node: int
    nondets: list[tuple[str, Value]] = field(default_factory=list)  # (kind, value)


@dataclass
class Violation:
    tag: str
    tid: int
    node: Optional[int]


@dataclass
class _Thread:
    tid: int
    func: str
    node: Optional[int]
    exited: bool = False
    waiting_lock: Optional[str] = None  # mutex key while blocked in lock
    waiting_cond: Optional[str] = None  # cond key while not yet woken
    joining: Optional[int] = None
    aliases: dict[str, str] = field(default_factory=dict)  # sync params -> caller keys


class ConcreteMachine:
    def __init__(self, cfg: ProgramCfg, width: int):
        self.cfg = cfg
        self.width = width
        self.store: dict[str, Value] = {}
        self.waiters: dict[str, set[int]] = {}
        self.violations: list[Violation] = []
        typed = cfg.typed
        for name, ty in typed.globals.items():
            self._init(name, ty, typed.global_init.get(name))
        main = cfg.threads["main"]
        self.threads = [_Thread(0, "main", main.entry)]
        self._feed: list[tuple[str, Value]] = []

    # -- helpers --------------------------------------------------------------

    def _init(self, key: str, ty: A.MtcType, init=None) -> None:
        if ty.kind == "array":
            for i in range(ty.length or 0):
                self.store[f"{key}[{i}]"] = 0
        elif ty.kind == "mutex":
            self.store[f"{key}.lock"] = 0
        elif ty.kind == "cond":
            self.waiters[key] = set()
        elif ty.kind == "thread_t":
            self.store[key] = -1
        elif ty.kind == "bool":
            self.store[key] = bool(init) if init is not None else False
        else:
            self.store[key] = sem.wrap(int(init), self.width) if init is not None else 0

    def _key(self, th: _Thread, name: str) -> str:
        if name in th.aliases:
            return th.aliases[name]
        if name in self.cfg.var_types[th.func]:
            return f"T{th.tid}.{name}"
        return name

    def _length(self, th: _Thread, name: str) -> int:
        ty = self.cfg.var_types[th.func].get(name) or self.cfg.globals[name]
        return ty.length or 0

    def _take(self, kind: str) -> Value:
        if not self._feed or self._feed[0][0] != kind:
            raise ReplayError(f"missing {kind} value")
        return self._feed.pop(0)[1]

    def eval(self, th: _Thread, e: A.Expr) -> Value:
        w = self.width
        if isinstance(e, A.IntLit):
            return sem.wrap(e.value, w)
        if isinstance(e, A.BoolLit):
            return e.value
        if isinstance(e, A.Name):
            return self.store.get(self._key(th, e.ident), 0)
        if isinstance(e, A.Index):
            i = self.eval(th, e.index)
            if 0 <= i < self._length(th, e.base.ident):
                return self.store[f"{self._key(th, e.base.ident)}[{i}]"]
            return 0
        if isinstance(e, A.Unary):
            x = self.eval(th, e.operand)
            if e.op == "!":
                return not x
            return sem.neg(x, w) if e.op == "-" else sem.bvnot(x, w)
        if isinstance(e, A.Binary):
            a = self.eval(th, e.left)
            b = self.eval(th, e.right)
            op = e.op
            if op in ("/", "%"):
                if self._feed and self._feed[0][0] == "divz":
                    arbitrary = self._take("divz")
                    if b == 0:
                        return arbitrary
                if b == 0:
                    raise ReplayError("division by zero without a chosen result")
                return sem.sdiv(a, b, w) if op == "/" else sem.srem(a, b, w)
            table = {
                "+": sem.add,
                "-": sem.sub,
                "*": sem.mul,
                "&": sem.bvand,
                "|": sem.bvor,
                "^": sem.bvxor,
                "<<": sem.shl,
                ">>": sem.ashr,
            }
            if op in table:
                return table[op](a, b, w)
            return {
                "&&": lambda: a and b,
                "||": lambda: a or b,
                "==": lambda: a == b,
                "!=": lambda: a != b,
                "<": lambda: a < b,
                "<=": lambda: a <= b,
                ">": lambda: a > b,
                ">=": lambda: a >= b,
            }[op]()
        if isinstance(e, A.Call):
            return self._take("nondet")
        raise ReplayError(f"cannot evaluate {type(e).__name__}")

    def _assign(self, th: _Thread, target: A.Expr, value: Value) -> None:
        if isinstance(target, A.Name):
            self.store[self._key(th, target.ident)] = value
            return
        i = self.eval(th, target.index)  # type: ignore[union-attr]
        if 0 <= i < self._length(th, target.base.ident):  # type: ignore[union-attr]
            self.store[f"{self._key(th, target.base.ident)}[{i}]"] = value  # type: ignore[union-attr]

    # -- control --------------------------------------------------------------

    def _next(self, th: _Thread, node, taken: Optional[bool] = None) -> None:
        for succ, pol in node.succs:
            if pol is None or pol == taken:
                th.node = succ
                return
        th.node = None

    def _finish(self, th: _Thread) -> None:
        th.exited = True
        th.node = None
        for other in self.threads:
            if other.joining == th.tid:
                other.joining = None

    def advance(self, th: _Thread) -> None:
        """Run control-only nodes until an effective node or the thread end."""
        cfg = self.cfg.threads[th.func]
        while not th.exited and th.node is not None:
            node = cfg.nodes[th.node]
            if node.kind is NodeKind.TEST:
                self._next(th, node, bool(self.eval(th, node.expr)))
            elif node.kind in (NodeKind.ATOMIC_BEGIN, NodeKind.ATOMIC_END):
                self._next(th, node)
            elif node.kind is NodeKind.EXIT:
                self._finish(th)
            elif node.kind is NodeKind.LOCK_RETRY and th.waiting_lock is None:
                self._next(th, node)  # the lock was taken at the first attempt
            else:
                return
        if th.node is None and not th.exited:
            self._finish(th)

    def blocked(self, th: _Thread) -> bool:
        if th.exited:
            return False
        if th.joining is not None:
            return True
        if th.waiting_cond is not None:
            return True
        if th.waiting_lock is not None:
            return self.store.get(f"{th.waiting_lock}.lock", 0) != 0
        return False

    def _finishing(self, th: _Thread) -> bool:
        """True if only control nodes separate ``th`` from its end."""
        if th.exited:
            return True
        if self.blocked(th):
            return False
        cfg = self.cfg.threads[th.func]
        pos = th.node
        while pos is not None:
            node = cfg.nodes[pos]
            if node.kind is NodeKind.TEST:
                taken = bool(self.eval(th, node.expr))
                pos = next((s for s, p in node.succs if p is None or p == taken), None)
            elif node.kind in (NodeKind.ATOMIC_BEGIN, NodeKind.ATOMIC_END) or (
                node.kind is NodeKind.LOCK_RETRY and th.waiting_lock is None
            ):
                pos = next((s for s, _ in node.succs), None)
            else:
                return node.kind is NodeKind.EXIT
        return True

    def deadlocked(self) -> bool:
        live = [t for t in self.threads if not self._finishing(t)]
        return bool(live) and all(self.blocked(t) for t in live)

    def execute(self, st: ReplayStep) -> None:
        if st.tid >= len(self.threads):
            raise ReplayError(f"thread {st.tid} was never created")
        th = self.threads[st.tid]
        self.advance(th)
        if th.exited or th.node != st.node:
            raise ReplayError(f"thread {st.tid} is at node {th.node}, trace expects {st.node}")
        node = self.cfg.threads[th.func].nodes[th.node]
        self._feed = list(st.nondets)
        self._run(th, node)
        if self._feed:
            raise ReplayError("unused nondet values")

    def _violate(self, tag: str, th: _Thread, node) -> None:
        self.violations.append(Violation(tag, th.tid, node.id))

    def _run(self, th: _Thread, node) -> None:
        k = node.kind
        if k is NodeKind.ASSIGN:
            self._assign(th, node.target, self.eval(th, node.expr))
        elif k is NodeKind.DECL:
            ty = node.decl_type
            key = f"T{th.tid}.{node.target.ident}"
            if ty.kind in ("int", "bool") and node.expr is not None:
                self.store[key] = self.eval(th, node.expr)
            else:
                self._init(key, ty)
        elif k is NodeKind.ASSERT:
            if not self.eval(th, node.expr):
                self._violate(node.tag, th, node)
        elif k is NodeKind.ASSUME:
            if not self.eval(th, node.expr):
                raise ReplayError(f"assumption fails at {node.loc}")
        elif k is NodeKind.LOCK:
            m = self._key(th, node.args[0].ident)
            if self.store.get(f"{m}.lock", 0) == 0:
                self.store[f"{m}.lock"] = 1
                th.waiting_lock = None
            else:
                th.waiting_lock = m
        elif k is NodeKind.LOCK_RETRY:
            m = th.waiting_lock
            if m is not None and self.store.get(f"{m}.lock", 0) != 0:
                if self.deadlocked():
                    self._violate("deadlock", th, node)
                    return  # stays blocked
                raise ReplayError(f"thread {th.tid} resumed while the mutex is held")
            if m is not None:
                self.store[f"{m}.lock"] = 1
            th.waiting_lock = None
        elif k is NodeKind.UNLOCK:
            m = self._key(th, node.args[0].ident)
            if self.store.get(f"{m}.lock", 0) == 0:
                self._violate("bad-unlock", th, node)
            self.store[f"{m}.lock"] = 0
        elif k is NodeKind.WAIT_RELEASE:
            c = self._key(th, node.args[0].ident)
            m = self._key(th, node.args[1].ident)
            if self.store.get(f"{m}.lock", 0) == 0:
                self._violate("bad-wait", th, node)
            self.store[f"{m}.lock"] = 0
            self.waiters.setdefault(c, set()).add(th.tid)
            th.waiting_cond = c
        elif k is NodeKind.WAIT_CHECK:
            if th.waiting_cond is not None:
                if self.deadlocked():
                    self._violate("deadlock", th, node)
                    return
                raise ReplayError(f"thread {th.tid} resumed without a signal")
        elif k in (NodeKind.SIGNAL, NodeKind.BROADCAST):
            c = self._key(th, node.args[0].ident)
            for t in self.waiters.get(c, set()):
                self.threads[t].waiting_cond = None
            self.waiters[c] = set()
        elif k is NodeKind.CREATE:
            func = node.args[1].ident
            cfg = self.cfg.threads[func]
            child = _Thread(len(self.threads), func, cfg.entry)
            aliases = {}
            types = self.cfg.var_types[func]
            for name, a in zip(cfg.params, node.args[2:]):
                if types[name].kind in ("mutex", "cond"):
                    aliases[name] = self._key(th, a.ident)
                else:
                    self.store[f"T{child.tid}.{name}"] = self.eval(th, a)
            child.aliases = aliases
            self.threads.append(child)
            self._assign(th, node.args[0], child.tid)
        elif k is NodeKind.JOIN:
            target = self.eval(th, node.args[0])
            if not (0 <= target < len(self.threads)):
                raise ReplayError(f"join on unknown thread {target}")
            if not self.threads[target].exited:
                th.joining = target
        else:
            raise ReplayError(f"unexpected node kind {k}")
        self._next(th, node)


def replay(cfg: ProgramCfg, width: int, steps: list[ReplayStep]) -> ConcreteMachine:
    """Run ``steps`` and settle every thread; returns the final machine."""
    machine = ConcreteMachine(cfg, width)
    for st in steps:
        machine.execute(st)
    for th in machine.threads:
        if not machine.blocked(th):
            machine.advance(th)
    return machine
