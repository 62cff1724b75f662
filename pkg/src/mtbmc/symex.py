"""Symbolic execution of the interleaved thread graphs.

A *step* runs one thread from its program counter up to the next context
switch opportunity.  Branches inside a thread are if-converted: every node
carries a guard (the disjunction of its incoming edge conditions) and
assignments become ``v' = ite(guard, rhs, v)``.  Guards are folded eagerly, so
tests over constant values prune whole branches and with them interleavings.

Switch opportunities sit before visible effective nodes (statements touching a
global or synchronizing).  With partial-order reduction disabled every
effective node is a switch point.  ``atomic`` regions suppress switch points
except where a thread blocks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from . import pthreads as P
from . import terms as T
from .cfg import NodeKind, ProgramCfg, ThreadCfg
from .frontend import ast as A
from .pthreads import ThreadStatus, VerificationError

__all__ = [
    "Assume",
    "Def",
    "ExecContext",
    "NodeExec",
    "Obligation",
    "ScheduleError",
    "StepOutcome",
    "StepRecord",
    "SymState",
    "ThreadState",
    "VerificationError",
    "enabled",
    "execute_interleaving",
    "explore",
    "explore_all",
    "initial_state",
    "schedulable",
    "step",
]


class ScheduleError(Exception):
    """An explicit schedule picked a thread that cannot move."""


# -- emitted events -----------------------------------------------------------


@dataclass(frozen=True)
class Def:
    """SSA definition ``sym := term``; ``old`` is the value it replaces."""

    sym: str
    term: T.Term
    old: T.Term

    @property
    def var(self) -> T.Term:
        return T.Var(self.sym, self.term.sort)


@dataclass(frozen=True)
class Assume:
    term: T.Term


@dataclass(frozen=True)
class Obligation:
    """``term`` holds exactly when the property is violated on this path."""

    term: T.Term
    tag: str
    loc: A.Loc
    tid: int
    text: str


Event = Union[Def, Assume, Obligation]


@dataclass
class NodeExec:
    """One executed statement, kept for counterexample traces."""

    tid: int
    node: int
    kind: NodeKind
    loc: A.Loc
    text: str
    guard: T.Term
    writes: list[tuple[str, T.Term]] = field(default_factory=list)
    nondets: list[T.Term] = field(default_factory=list)


@dataclass
class StepRecord:
    tid: int
    execs: list[NodeExec]
    events: list[Event]
    effective: bool
    visible: bool

    @property
    def defs(self) -> list[Def]:
        return [e for e in self.events if isinstance(e, Def)]

    @property
    def obligations(self) -> list[Obligation]:
        return [e for e in self.events if isinstance(e, Obligation)]

    @property
    def assumes(self) -> list[Assume]:
        return [e for e in self.events if isinstance(e, Assume)]


# -- state --------------------------------------------------------------------


@dataclass
class ThreadState:
    tid: int
    func: str
    pc: int = 0  # index into the thread's linear order
    pending: dict[int, T.Term] = field(default_factory=dict)  # node id -> guard so far
    atomic: int = 0
    status: ThreadStatus = ThreadStatus.FREE
    join_target: Optional[int] = None
    join_guard: T.Term = T.TRUE
    aliases: dict[str, str] = field(default_factory=dict)  # sync params -> caller keys

    def copy(self) -> "ThreadState":
        return ThreadState(
            self.tid,
            self.func,
            self.pc,
            dict(self.pending),
            self.atomic,
            self.status,
            self.join_target,
            self.join_guard,
            self.aliases,
        )


@dataclass
class SymState:
    threads: list[ThreadState]
    store: dict[str, T.Term]  # variable key -> current value (constant or SSA symbol)
    assumed: T.Term = T.TRUE  # conjunction of path assumptions

    def fork(self, tid: int) -> "SymState":
        threads = list(self.threads)
        threads[tid] = threads[tid].copy()
        return SymState(threads, dict(self.store), self.assumed)

    @property
    def pruned(self) -> bool:
        return self.assumed.is_false()

    def live(self) -> list[int]:
        return [t.tid for t in self.threads if t.status is not ThreadStatus.EXITED]


@dataclass
class ExecContext:
    """Per-task settings and the fresh-name counters shared by one exploration."""

    cfg: ProgramCfg
    width: int = 32
    por: bool = True
    division_checks: bool = False
    counter: Iterator[int] = field(default_factory=lambda: itertools.count(1))

    def fresh(self, base: str) -> str:
        return f"{base}#{next(self.counter)}"

    def thread_cfg(self, th: ThreadState) -> ThreadCfg:
        return self.cfg.threads[th.func]


def _zero(ty: A.MtcType, width: int) -> T.Term:
    return T.FALSE if ty.kind == "bool" else T.BvConst(0, width)


def _init_var(store: dict[str, T.Term], key: str, ty: A.MtcType, width: int, init=None) -> None:
    if ty.kind == "array":
        for i in range(ty.length or 0):
            store[f"{key}[{i}]"] = T.BvConst(0, width)
    elif ty.kind == "mutex":
        m = P.MutexModel(key)
        for f in (m.lock_field, m.count_field, m.gen_field):
            store[f] = T.BvConst(0, width)
    elif ty.kind == "cond":
        c = P.CondModel(key)
        for f in (c.lock_field, c.nwaiters_field, c.gen_field):
            store[f] = T.BvConst(0, width)
    elif ty.kind == "thread_t":
        store[key] = T.BvConst(-1, width)
    elif ty.kind == "bool":
        store[key] = T.BoolConst(bool(init)) if init is not None else T.FALSE
    else:
        store[key] = T.BvConst(int(init), width) if init is not None else T.BvConst(0, width)


def initial_state(ctx: ExecContext) -> SymState:
    store: dict[str, T.Term] = {}
    typed = ctx.cfg.typed
    for name, ty in typed.globals.items():
        _init_var(store, name, ty, ctx.width, typed.global_init.get(name))
    for key, v in P.initial_fields([], []).items():
        store[key] = T.BvConst(v, ctx.width)
    main = ctx.cfg.threads["main"]
    th = ThreadState(0, "main", pending={main.entry: T.TRUE})
    return SymState([th], store)


# -- single step ----------------------------------------------------------------


class StepExecutor:
    """Executes nodes of one thread on a private copy of the state."""

    def __init__(self, ctx: ExecContext, state: SymState, tid: int):
        self.ctx = ctx
        self.state = state
        self.tid = tid
        self.events: list[Event] = []
        self.execs: list[NodeExec] = []
        self.node = None
        self.cur: Optional[NodeExec] = None

    # helpers used by the pthread models

    @property
    def th(self) -> ThreadState:
        return self.state.threads[self.tid]

    def const(self, v: int) -> T.Term:
        return T.BvConst(v, self.ctx.width)

    def local(self, name: str) -> str:
        return f"T{self.tid}.{name}"

    def where(self) -> str:
        return str(self.node.loc) if self.node is not None else "<start>"

    def read(self, key: str, sort: Optional[T.Sort] = None) -> T.Term:
        v = self.state.store.get(key)
        if v is None:
            return T.FALSE if sort == T.BOOL else self.const(0)
        return v

    def write(
        self, key: str, value: T.Term, g: T.Term, sort: Optional[T.Sort] = None, show: bool = False
    ) -> None:
        if g.is_false():
            return
        old = self.read(key, sort if sort is not None else value.sort)
        new = T.Ite(g, value, old)
        sym = self.ctx.fresh(key)
        self.events.append(Def(sym, new, old))
        stored = new if new.is_const else T.Var(sym, new.sort)
        self.state.store[key] = stored
        if show and self.cur is not None:
            self.cur.writes.append((self._display(key), stored))

    def _display(self, key: str) -> str:
        if key.startswith(f"T{self.tid}."):
            return key[len(f"T{self.tid}.") :]
        return key

    def check(self, g: T.Term, cond: T.Term, tag: str) -> None:
        viol = T.And(g, T.Not(cond))
        if viol.is_false():
            return
        term = T.And(self.state.assumed, viol)
        if term.is_false():
            return
        self.events.append(Obligation(term, tag, self.node.loc, self.tid, self.node.text))

    def assume(self, g: T.Term, cond: T.Term) -> None:
        a = T.Implies(g, cond)
        if a.is_true():
            return
        self.events.append(Assume(a))
        self.state.assumed = T.And(self.state.assumed, a)

    def spawn(self, func: str, args: list[T.Term]) -> int:
        tid = len(self.state.threads)
        cfg = self.ctx.cfg.threads[func]
        child = ThreadState(tid, func, pending={cfg.entry: T.TRUE})
        types = self.ctx.cfg.var_types[func]
        aliases = {}
        for name, value in zip(cfg.params, args):
            key = f"T{tid}.{name}"
            if types[name].kind in ("mutex", "cond"):
                aliases[name] = value.payload  # carried as a key, see _eval_args
            else:
                self.state.store[key] = value
        child.aliases = aliases
        self.state.threads.append(child)
        return tid

    def thread_exists(self, tid: int) -> bool:
        return 0 <= tid < len(self.state.threads)

    def thread_status(self, tid: int) -> ThreadStatus:
        return self.state.threads[tid].status

    def block_on_join(self, target: int, g: T.Term) -> None:
        th = self.th
        th.status = ThreadStatus.JOIN_WAIT
        th.join_target = target
        th.join_guard = g

    def finish_thread(self) -> list[tuple[int, T.Term]]:
        th = self.th
        th.status = ThreadStatus.EXITED
        th.pc = len(self.ctx.thread_cfg(th).order)
        th.pending = {}
        woken = []
        for i, other in enumerate(self.state.threads):
            if other.status is ThreadStatus.JOIN_WAIT and other.join_target == self.tid:
                other = other.copy()
                other.status = ThreadStatus.FREE
                other.join_target = None
                self.state.threads[i] = other
                woken.append((i, other.join_guard))
        return woken

    # expressions

    def key(self, name: str) -> str:
        th = self.th
        if name in th.aliases:
            return th.aliases[name]
        if name in self.ctx.cfg.var_types[th.func]:
            return f"T{self.tid}.{name}"
        return name

    def _array_len(self, name: str) -> int:
        ty = self.ctx.cfg.var_types[self.th.func].get(name) or self.ctx.cfg.globals[name]
        return ty.length or 0

    def eval(self, e: A.Expr) -> T.Term:
        w = self.ctx.width
        if isinstance(e, A.IntLit):
            return T.BvConst(e.value, w)
        if isinstance(e, A.BoolLit):
            return T.BoolConst(e.value)
        if isinstance(e, A.Name):
            sort = T.BOOL if e.ty is not None and e.ty.kind == "bool" else None
            return self.read(self.key(e.ident), sort)
        if isinstance(e, A.Index):
            base = self.key(e.base.ident)
            n = self._array_len(e.base.ident)
            idx = self.eval(e.index)
            if idx.is_const:
                i = idx.value
                return self.read(f"{base}[{i}]") if 0 <= i < n else self.const(0)
            out = self.const(0)
            for i in reversed(range(n)):
                out = T.Ite(T.Eq(idx, self.const(i)), self.read(f"{base}[{i}]"), out)
            return out
        if isinstance(e, A.Unary):
            x = self.eval(e.operand)
            if e.op == "!":
                return T.Not(x)
            return T.BvUn("bvneg" if e.op == "-" else "bvnot", x)
        if isinstance(e, A.Binary):
            return self._binary(e)
        if isinstance(e, A.Call):
            if e.name == "nondet_bool":
                v = T.Var(self.ctx.fresh("nondet"), T.BOOL)
            elif e.name == "nondet_int":
                v = T.Var(self.ctx.fresh("nondet"), w)
            else:
                raise VerificationError(f"{e.loc}: {e.name} cannot be used as a value")
            if self.cur is not None:
                self.cur.nondets.append(v)
            return v
        raise TypeError(f"cannot evaluate {type(e).__name__}")

    _ARITH = {
        "+": "bvadd",
        "-": "bvsub",
        "*": "bvmul",
        "&": "bvand",
        "|": "bvor",
        "^": "bvxor",
        "<<": "bvshl",
        ">>": "bvashr",
    }

    def _binary(self, e: A.Binary) -> T.Term:
        op = e.op
        a = self.eval(e.left)
        b = self.eval(e.right)
        if op in self._ARITH:
            return T.BvBin(self._ARITH[op], a, b)
        if op in ("/", "%"):
            return self._division(op, a, b)
        if op == "&&":
            return T.And(a, b)
        if op == "||":
            return T.Or(a, b)
        if op == "==":
            return T.Eq(a, b)
        if op == "!=":
            return T.Ne(a, b)
        if op == "<":
            return T.Slt(a, b)
        if op == "<=":
            return T.Sle(a, b)
        if op == ">":
            return T.Slt(b, a)
        if op == ">=":
            return T.Sle(b, a)
        raise ValueError(f"unknown operator {op}")

    def _division(self, op: str, a: T.Term, b: T.Term) -> T.Term:
        q = T.BvBin("bvsdiv" if op == "/" else "bvsrem", a, b)
        zero = T.Eq(b, self.const(0))
        if zero.is_false():
            return q
        if self.ctx.division_checks and self.cur is not None:
            self.check(self.cur.guard, T.Not(zero), "division-by-zero")
        # division by zero is undefined in C: the result is an arbitrary value
        v = T.Var(self.ctx.fresh("divz"), self.ctx.width)
        if self.cur is not None:
            self.cur.nondets.append(v)
        return T.Ite(zero, v, q)

    def assign(self, target: A.Expr, value: T.Term, g: T.Term) -> None:
        if isinstance(target, A.Name):
            self.write(self.key(target.ident), value, g, show=True)
            return
        assert isinstance(target, A.Index)
        base = self.key(target.base.ident)
        n = self._array_len(target.base.ident)
        idx = self.eval(target.index)
        if idx.is_const:
            if 0 <= idx.value < n:
                self.write(f"{base}[{idx.value}]", value, g, show=True)
            return  # out-of-bounds writes are dropped
        for i in range(n):
            self.write(f"{base}[{i}]", value, T.And(g, T.Eq(idx, self.const(i))), show=True)

    def declare(self, node, g: T.Term) -> None:
        name = node.target.ident
        key = f"T{self.tid}.{name}"
        ty = node.decl_type
        if ty.kind in ("int", "bool"):
            value = self.eval(node.expr) if node.expr is not None else _zero(ty, self.ctx.width)
            self.write(key, value, g, show=True)
            return
        fresh: dict[str, T.Term] = {}
        _init_var(fresh, key, ty, self.ctx.width)
        for k, v in fresh.items():
            self.write(k, v, g)

    def sync_key(self, e: A.Expr) -> str:
        return self.key(e.ident)  # type: ignore[union-attr]


@dataclass
class StepOutcome:
    """Result of trying to run a thread.

    ``kind`` is ``"effective"`` (the thread executed something), ``"bypass"``
    (it ran to its end without executing anything) or ``"blocked"``.
    """

    kind: str
    state: Optional[SymState]
    record: Optional[StepRecord]


def step(ctx: ExecContext, state: SymState, tid: int) -> StepOutcome:
    """Run thread ``tid`` up to its next context-switch opportunity."""
    base = state.threads[tid]
    cfg = ctx.cfg.threads[base.func]
    order = cfg.order
    if base.status in (ThreadStatus.EXITED, ThreadStatus.JOIN_WAIT) or base.pc >= len(order):
        return StepOutcome("blocked", None, None)
    st = state.fork(tid)
    ex = StepExecutor(ctx, st, tid)
    th = st.threads[tid]
    executed = False
    visible_done = False
    checkpoint = None  # (pc, pending, atomic, status, #events, #execs)

    def save():
        return (th.pc, dict(th.pending), th.atomic, th.status, len(ex.events), len(ex.execs))

    def restore(cp) -> None:
        th.pc, th.pending, th.atomic, th.status = cp[0], cp[1], cp[2], cp[3]
        del ex.events[cp[4] :]
        del ex.execs[cp[5] :]

    while th.pc < len(order) and th.status is not ThreadStatus.EXITED:
        nid = order[th.pc]
        node = cfg.nodes[nid]
        g = th.pending.pop(nid, T.FALSE)
        eff_g = g
        if node.kind is NodeKind.LOCK_RETRY and not g.is_false():
            eff_g = T.And(g, ex.read(ex.local(P.LOCK_BLOCKED), T.BOOL))
        effective = node.effective and not eff_g.is_false()
        if effective and executed:
            in_atomic = checkpoint[2] > 0 and th.atomic > 0
            switch = (not ctx.por) or (node.visible and visible_done)
            if switch and not in_atomic:
                restore(checkpoint)
                break
        ex.node = node
        if effective and node.kind in (NodeKind.LOCK_RETRY, NodeKind.WAIT_CHECK):
            if node.kind is NodeKind.LOCK_RETRY:
                _, still, dead = P.lock_retry_state(ex, g, P.MutexModel(ex.sync_key(node.args[0])))
            else:
                still, dead = P.wait_check_state(ex, g, P.CondModel(ex.sync_key(node.args[0])))
            if still.is_true() and dead.is_false():
                if executed:
                    th.pending[nid] = g
                    restore(checkpoint)
                    break
                return StepOutcome("blocked", None, None)
        forced = _execute(ex, node, g, eff_g, effective, th.pc == len(order) - 1)
        if th.status is ThreadStatus.EXITED:
            checkpoint = save()
            break
        th.pc += 1
        if effective:
            executed = True
            # a create enables a thread, so it opens a switch point like a visible access
            visible_done = visible_done or node.visible or node.kind is NodeKind.CREATE
            checkpoint = save()
            if forced or st.pruned:
                break
        elif node.kind is NodeKind.EXIT:
            checkpoint = save()
    if th.pc >= len(order) and th.status is not ThreadStatus.EXITED:
        ex.finish_thread()
    if not executed and th.status is not ThreadStatus.EXITED:
        return StepOutcome("blocked", None, None)
    record = StepRecord(tid, ex.execs, ex.events, executed, visible_done)
    return StepOutcome("effective" if executed else "bypass", st, record)


def _execute(ex: StepExecutor, node, g: T.Term, eff_g: T.Term, effective: bool, last: bool) -> bool:
    """Run one node; returns True when the step must end right after it."""
    th = ex.th
    k = node.kind
    forced = False
    if g.is_false():
        return False
    cur = NodeExec(ex.tid, node.id, k, node.loc, node.text, eff_g)
    ex.cur = cur
    succ_guards: Optional[tuple[T.Term, T.Term]] = None
    if k is NodeKind.TEST:
        c = ex.eval(node.expr)
        succ_guards = (T.And(g, c), T.And(g, T.Not(c)))
    elif k is NodeKind.ASSIGN:
        ex.assign(node.target, ex.eval(node.expr), g)
    elif k is NodeKind.DECL:
        ex.declare(node, g)
    elif k is NodeKind.ASSERT:
        ex.check(g, ex.eval(node.expr), node.tag)
    elif k is NodeKind.ASSUME:
        ex.assume(g, ex.eval(node.expr))
    elif k is NodeKind.LOCK:
        blk = P.model_lock(ex, g, P.MutexModel(ex.sync_key(node.args[0])))
        if not blk.is_false():
            th.status = ThreadStatus.LOCK_WAIT
            forced = True
    elif k is NodeKind.LOCK_RETRY:
        if effective:
            P.model_lock_retry(ex, g, P.MutexModel(ex.sync_key(node.args[0])))
        th.status = ThreadStatus.FREE
    elif k is NodeKind.UNLOCK:
        P.model_unlock(ex, g, P.MutexModel(ex.sync_key(node.args[0])))
    elif k is NodeKind.WAIT_RELEASE:
        P.model_wait_release(
            ex, g, P.CondModel(ex.sync_key(node.args[0])), P.MutexModel(ex.sync_key(node.args[1]))
        )
        th.status = ThreadStatus.COND_WAIT
        forced = True
    elif k is NodeKind.WAIT_CHECK:
        P.model_wait_check(ex, g, P.CondModel(ex.sync_key(node.args[0])))
        th.status = ThreadStatus.FREE
    elif k in (NodeKind.SIGNAL, NodeKind.BROADCAST):
        P.model_signal(ex, g, P.CondModel(ex.sync_key(node.args[0])), k is NodeKind.BROADCAST)
    elif k is NodeKind.CREATE:
        func = node.args[1].ident
        types = ex.ctx.cfg.var_types[func]
        params = ex.ctx.cfg.threads[func].params
        args = []
        for name, a in zip(params, node.args[2:]):
            if types[name].kind in ("mutex", "cond"):
                args.append(_KeyRef(ex.sync_key(a)))
            else:
                args.append(ex.eval(a))
        handle = node.args[0]
        P.model_create(ex, g, ex.key(handle.ident), func, args)
    elif k is NodeKind.JOIN:
        forced = P.model_join(ex, g, ex.eval(node.args[0]))
    elif k is NodeKind.EXIT:
        P.model_exit(ex, g, last)
    elif k is NodeKind.ATOMIC_BEGIN:
        th.atomic += 1
    elif k is NodeKind.ATOMIC_END:
        th.atomic = max(0, th.atomic - 1)
    if effective:
        ex.execs.append(cur)
    ex.cur = None
    if th.status is ThreadStatus.EXITED:
        return forced
    for succ, pol in node.succs:
        if succ_guards is not None and pol is not None:
            contrib = succ_guards[0] if pol else succ_guards[1]
        else:
            contrib = g
        if contrib.is_false():
            continue
        prev = th.pending.get(succ)
        th.pending[succ] = contrib if prev is None else T.Or(prev, contrib)
    return forced


@dataclass(frozen=True)
class _KeyRef:
    """Stands in for a mutex or cond argument passed to a thread."""

    payload: str


# -- enabledness ------------------------------------------------------------------


def schedulable(ctx: ExecContext, state: SymState) -> list[tuple[int, StepOutcome]]:
    """Threads that can be scheduled now, with the step each would take."""
    out = []
    if state.pruned:
        return out
    for th in state.threads:
        if th.status in (ThreadStatus.EXITED, ThreadStatus.JOIN_WAIT):
            continue
        res = step(ctx, state, th.tid)
        if res.kind != "blocked":
            out.append((th.tid, res))
    return out


def enabled(ctx: ExecContext, state: SymState) -> set[int]:
    """Threads that would execute at least one effective statement."""
    return {tid for tid, res in schedulable(ctx, state) if res.kind == "effective"}


@dataclass
class SsaTrace:
    steps: list[StepRecord]
    state: SymState

    @property
    def events(self) -> list[Event]:
        return [e for s in self.steps for e in s.events]

    @property
    def obligations(self) -> list[Obligation]:
        return [e for e in self.events if isinstance(e, Obligation)]


def execute_interleaving(ctx: ExecContext, sched: list[int], state: Optional[SymState] = None) -> SsaTrace:
    """Follow an explicit thread sequence; each entry is one step."""
    state = state if state is not None else initial_state(ctx)
    steps = []
    for tid in sched:
        if tid >= len(state.threads):
            raise ScheduleError(f"thread {tid} does not exist yet")
        res = step(ctx, state, tid)
        if res.kind == "blocked":
            raise ScheduleError(f"thread {tid} cannot move")
        steps.append(res.record)
        state = res.state
    return SsaTrace(steps, state)


# -- exploration tree ---------------------------------------------------------------


class ExplorationLimit(Exception):
    """More interleavings than the caller allowed."""


@dataclass(eq=False)
class TreeNode:
    """A step in the interleaving tree; the root stands for the initial state."""

    id: int
    parent: Optional["TreeNode"]
    record: Optional[StepRecord]
    depth: int = 0
    children: list["TreeNode"] = field(default_factory=list)
    leaf_obligations: list[Obligation] = field(default_factory=list)
    has_obligation: bool = False

    @property
    def tid(self) -> int:
        return self.record.tid if self.record is not None else 0

    def path(self) -> list["TreeNode"]:
        out = []
        n: Optional[TreeNode] = self
        while n is not None and n.record is not None:
            out.append(n)
            n = n.parent
        out.reverse()
        return out

    def obligations(self) -> list[Obligation]:
        """Every obligation on the path from the root to this node."""
        obs = [o for n in self.path() for o in n.record.obligations]  # type: ignore[union-attr]
        return obs + self.leaf_obligations

    def schedule(self) -> list[int]:
        return [n.tid for n in self.path()]


@dataclass
class Exploration:
    root: TreeNode
    leaves: list[TreeNode]
    nodes: int


def explore(
    ctx: ExecContext,
    limit: Optional[int] = None,
) -> Iterator[TreeNode]:
    """Depth-first enumeration of interleavings, lowest thread id first.

    Yields each leaf as soon as it is reached.  A path cut off by an
    assumption is only reported when it carries an obligation.
    """
    from .por import RwSets, choose

    rw = RwSets(ctx.cfg) if ctx.por else None
    ids = itertools.count()
    root = TreeNode(next(ids), None, None)
    stack: list[tuple[TreeNode, SymState]] = [(root, initial_state(ctx))]
    count = 0
    while stack:
        node, state = stack.pop()
        kids = [] if state.pruned else schedulable(ctx, state)
        if kids and rw is not None:
            live = [(t.tid, t.func, t.pc) for t in state.threads if t.status is not ThreadStatus.EXITED]
            keep = set(choose(rw, live, [tid for tid, _ in kids]))
            kids = [(tid, res) for tid, res in kids if tid in keep]
        if not kids:
            if not state.pruned and state.live():
                node.leaf_obligations.append(
                    Obligation(state.assumed, "deadlock", A.NOLOC, -1, "no thread can move")
                )
                node.has_obligation = True
            if state.pruned and not node.has_obligation:
                continue
            count += 1
            if limit is not None and count > limit:
                raise ExplorationLimit(f"more than {limit} interleavings")
            yield node
            continue
        children = []
        for tid, res in kids:
            child = TreeNode(next(ids), node, res.record, node.depth + 1)
            child.has_obligation = node.has_obligation or bool(res.record.obligations)
            node.children.append(child)
            children.append((child, res.state))
        # reversed so the lowest thread id is expanded first
        stack.extend(reversed(children))


def explore_all(ctx: ExecContext, limit: Optional[int] = None) -> Exploration:
    leaves = list(explore(ctx, limit))
    root = leaves[0] if leaves else None
    while root is not None and root.parent is not None:
        root = root.parent
    if root is None:
        root = TreeNode(0, None, None)
    return Exploration(root, leaves, _count(root))


def _count(root: TreeNode) -> int:
    n, stack = 0, [root]
    while stack:
        x = stack.pop()
        n += 1
        stack.extend(x.children)
    return n
