"""Per-thread control-flow graphs, side-effect hoisting and loop unrolling.

Every thread definition (and the ``main`` block) becomes a graph whose nodes
are single statements.  Branch tests are made pure first: assignment
expressions and ``nondet_*`` calls inside any expression are hoisted into
preceding assignment nodes, evaluated left to right.

``unroll`` copies each loop body ``k`` times and closes the last copy with an
optional unwinding assertion followed by ``assume(false)``.  The result is a
DAG, which ``linearize`` orders topologically; that order is the program
counter used by symbolic execution.
"""

from __future__ import annotations

import copy
import heapq
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .frontend import ast as A
from .frontend.pretty import expr_str
from .frontend.typecheck import TypedProgram

log = logging.getLogger(__name__)

SYNC = "__sync"  # pseudo-variable shared by all synchronization operations


class NodeKind(Enum):
    ASSIGN = "assign"
    DECL = "decl"
    ASSERT = "assert"
    ASSUME = "assume"
    TEST = "test"
    LOCK = "lock"
    LOCK_RETRY = "lock-retry"
    UNLOCK = "unlock"
    WAIT_RELEASE = "wait-release"
    WAIT_CHECK = "wait-check"
    SIGNAL = "signal"
    BROADCAST = "broadcast"
    CREATE = "create"
    JOIN = "join"
    EXIT = "exit"
    ATOMIC_BEGIN = "atomic-begin"
    ATOMIC_END = "atomic-end"


# kinds that change state or carry an obligation; everything else only steers control
EFFECTIVE = frozenset(
    {
        NodeKind.ASSIGN,
        NodeKind.DECL,
        NodeKind.ASSERT,
        NodeKind.ASSUME,
        NodeKind.LOCK,
        NodeKind.LOCK_RETRY,
        NodeKind.UNLOCK,
        NodeKind.WAIT_RELEASE,
        NodeKind.WAIT_CHECK,
        NodeKind.SIGNAL,
        NodeKind.BROADCAST,
        NodeKind.CREATE,
        NodeKind.JOIN,
    }
)

# synchronization kinds are visible regardless of the variables they name
ALWAYS_VISIBLE = frozenset(
    {
        NodeKind.LOCK,
        NodeKind.LOCK_RETRY,
        NodeKind.UNLOCK,
        NodeKind.WAIT_RELEASE,
        NodeKind.WAIT_CHECK,
        NodeKind.SIGNAL,
        NodeKind.BROADCAST,
        NodeKind.JOIN,
    }
)


@dataclass
class Node:
    id: int
    kind: NodeKind
    loc: A.Loc
    text: str
    target: Optional[A.Expr] = None  # ASSIGN / DECL lvalue
    expr: Optional[A.Expr] = None  # assigned value, test, assert/assume condition
    args: list[A.Expr] = field(default_factory=list)
    decl_type: Optional[A.MtcType] = None
    tag: str = "assertion"
    succs: list[tuple[int, Optional[bool]]] = field(default_factory=list)
    reads: frozenset[str] = frozenset()
    writes: frozenset[str] = frozenset()
    global_reads: frozenset[str] = frozenset()
    global_writes: frozenset[str] = frozenset()
    visible: bool = False

    @property
    def effective(self) -> bool:
        return self.kind in EFFECTIVE


@dataclass
class Loop:
    head: int  # first node of an iteration (hoisted test prefix or the test)
    body: set[int]
    parent: Optional["Loop"] = None
    exit_test: int = -1

    @property
    def depth(self) -> int:
        d, p = 0, self.parent
        while p is not None:
            d, p = d + 1, p.parent
        return d


@dataclass
class ThreadCfg:
    """Graph for one thread body; ``order`` is set once the graph is acyclic."""

    name: str
    params: list[str]
    nodes: dict[int, Node]
    entry: int
    loops: list[Loop] = field(default_factory=list)
    order: list[int] = field(default_factory=list)
    unwind: Optional[int] = None
    unwinding_assertions: bool = True

    def preds(self) -> dict[int, list[tuple[int, Optional[bool]]]]:
        out: dict[int, list[tuple[int, Optional[bool]]]] = {n: [] for n in self.nodes}
        for nid, node in self.nodes.items():
            for succ, pol in node.succs:
                out[succ].append((nid, pol))
        return out

    def is_acyclic(self) -> bool:
        indeg = {n: 0 for n in self.nodes}
        for node in self.nodes.values():
            for succ, _ in node.succs:
                indeg[succ] += 1
        ready = [n for n, d in indeg.items() if d == 0]
        seen = 0
        while ready:
            n = ready.pop()
            seen += 1
            for succ, _ in self.nodes[n].succs:
                indeg[succ] -= 1
                if indeg[succ] == 0:
                    ready.append(succ)
        return seen == len(self.nodes)


@dataclass
class ProgramCfg:
    typed: TypedProgram
    threads: dict[str, ThreadCfg]
    var_types: dict[str, dict[str, A.MtcType]]  # per function, locals including temps
    globals: dict[str, A.MtcType]
    warnings: list[str] = field(default_factory=list)
    uses_blocking: bool = False

    @property
    def origin(self) -> str:
        return self.typed.origin


# ---------------------------------------------------------------------------
# Expression helpers
# ---------------------------------------------------------------------------


def expr_vars(e: Optional[A.Expr]) -> set[str]:
    """Names read by an expression (array reads count as the whole array)."""
    out: set[str] = set()
    if e is None:
        return out
    stack = [e]
    while stack:
        x = stack.pop()
        if isinstance(x, A.Name):
            out.add(x.ident)
        elif isinstance(x, A.Index):
            out.add(x.base.ident)
            stack.append(x.index)
        elif isinstance(x, A.Unary):
            stack.append(x.operand)
        elif isinstance(x, A.Binary):
            stack.extend((x.left, x.right))
        elif isinstance(x, A.Call):
            stack.extend(x.args)
        elif isinstance(x, A.AssignExpr):
            stack.extend((x.target, x.value))
    return out


def _has_effects(e: A.Expr) -> bool:
    if isinstance(e, (A.AssignExpr, A.Call)):
        return True
    if isinstance(e, A.Index):
        return _has_effects(e.index)
    if isinstance(e, A.Unary):
        return _has_effects(e.operand)
    if isinstance(e, A.Binary):
        return _has_effects(e.left) or _has_effects(e.right)
    return False


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


class _Builder:
    def __init__(self, pc: "_ProgramBuilder", func: str, types: dict[str, A.MtcType]):
        self.pc = pc
        self.func = func
        self.types = types
        self.nodes: dict[int, Node] = {}
        self.loops: list[Loop] = []
        self.loop_stack: list[Loop] = []
        self.next_id = 0
        self.tmp = 0

    def new(self, kind: NodeKind, loc: A.Loc, text: str, **kw) -> Node:
        node = Node(self.next_id, kind, loc, text, **kw)
        self.nodes[node.id] = node
        self.next_id += 1
        for loop in self.loop_stack:
            loop.body.add(node.id)
        return node

    # the frontier is the list of dangling edges that the next node picks up
    def attach(self, frontier: list[tuple[int, Optional[bool]]], node: Node) -> list:
        for src, pol in frontier:
            self.nodes[src].succs.append((node.id, pol))
        return [(node.id, None)]

    def fresh_tmp(self, ty: A.MtcType) -> str:
        self.tmp += 1
        name = f"__tmp{self.tmp}"
        self.types[name] = ty
        return name

    # -- expressions --------------------------------------------------------

    def lower(self, e: A.Expr, frontier: list, keep_call: bool = False) -> tuple[A.Expr, list]:
        """Hoist side effects out of ``e``; returns the pure expression."""
        if not _has_effects(e):
            return e, frontier
        if isinstance(e, A.Call):
            if keep_call:
                return e, frontier
            name = self.fresh_tmp(e.ty)
            tmp = A.Name(name, loc=e.loc, ty=e.ty)
            node = self.new(NodeKind.ASSIGN, e.loc, f"{name} = {expr_str(e)};", target=tmp, expr=e)
            frontier = self.attach(frontier, node)
            return A.Name(name, loc=e.loc, ty=e.ty), frontier
        if isinstance(e, A.AssignExpr):
            target, frontier = self.lower_target(e.target, frontier)
            value, frontier = self.lower(e.value, frontier, keep_call=True)
            if isinstance(target, A.Name):
                node = self.new(
                    NodeKind.ASSIGN,
                    e.loc,
                    f"{expr_str(target)} = {expr_str(value)};",
                    target=target,
                    expr=value,
                )
                frontier = self.attach(frontier, node)
                return A.Name(target.ident, loc=e.loc, ty=e.ty), frontier
            name = self.fresh_tmp(e.ty)
            tmp = A.Name(name, loc=e.loc, ty=e.ty)
            n1 = self.new(NodeKind.ASSIGN, e.loc, f"{name} = {expr_str(value)};", target=tmp, expr=value)
            frontier = self.attach(frontier, n1)
            read = A.Name(name, loc=e.loc, ty=e.ty)
            n2 = self.new(
                NodeKind.ASSIGN, e.loc, f"{expr_str(target)} = {name};", target=target, expr=read
            )
            frontier = self.attach(frontier, n2)
            return A.Name(name, loc=e.loc, ty=e.ty), frontier
        if isinstance(e, A.Index):
            idx, frontier = self.lower(e.index, frontier)
            return A.Index(e.base, idx, loc=e.loc, ty=e.ty), frontier
        if isinstance(e, A.Unary):
            inner, frontier = self.lower(e.operand, frontier)
            return A.Unary(e.op, inner, loc=e.loc, ty=e.ty), frontier
        if isinstance(e, A.Binary):
            left, frontier = self.lower(e.left, frontier)
            right, frontier = self.lower(e.right, frontier)
            return A.Binary(e.op, left, right, loc=e.loc, ty=e.ty), frontier
        raise TypeError(f"cannot lower {type(e).__name__}")

    def lower_target(self, t: A.Expr, frontier: list) -> tuple[A.Expr, list]:
        if isinstance(t, A.Index):
            idx, frontier = self.lower(t.index, frontier)
            return A.Index(t.base, idx, loc=t.loc, ty=t.ty), frontier
        return t, frontier

    # -- statements ---------------------------------------------------------

    def block(self, stmts: list[A.Stmt], frontier: list) -> list:
        for s in stmts:
            frontier = self.stmt(s, frontier)
        return frontier

    def stmt(self, s: A.Stmt, frontier: list) -> list:
        if isinstance(s, A.Block):
            return self.block(s.stmts, frontier)
        if isinstance(s, A.Empty):
            return frontier
        if isinstance(s, A.Atomic):
            b = self.new(NodeKind.ATOMIC_BEGIN, s.loc, "atomic {")
            frontier = self.attach(frontier, b)
            frontier = self.block(s.body.stmts, frontier)
            e = self.new(NodeKind.ATOMIC_END, s.loc, "}")
            return self.attach(frontier, e)
        if isinstance(s, A.VarDecl):
            self.types[s.name] = s.type
            value = None
            if s.init is not None:
                value, frontier = self.lower(s.init, frontier, keep_call=True)
            text = f"{_decl_text(s.type, s.name)}"
            text += f" = {expr_str(value)};" if value is not None else ";"
            target = A.Name(s.name, loc=s.loc, ty=s.type)
            node = self.new(NodeKind.DECL, s.loc, text, target=target, expr=value, decl_type=s.type)
            return self.attach(frontier, node)
        if isinstance(s, A.Assign):
            target, frontier = self.lower_target(s.target, frontier)
            value, frontier = self.lower(s.value, frontier, keep_call=True)
            node = self.new(
                NodeKind.ASSIGN,
                s.loc,
                f"{expr_str(target)} = {expr_str(value)};",
                target=target,
                expr=value,
            )
            return self.attach(frontier, node)
        if isinstance(s, A.If):
            cond, frontier = self.lower(s.cond, frontier)
            test = self.new(NodeKind.TEST, s.loc, f"[{expr_str(cond)}]", expr=cond)
            self.attach(frontier, test)
            out = self.stmt(s.then, [(test.id, True)])
            if s.orelse is not None:
                out = out + self.stmt(s.orelse, [(test.id, False)])
            else:
                out = out + [(test.id, False)]
            return out
        if isinstance(s, A.While):
            return self.loop(s, frontier)
        if isinstance(s, A.CallStmt):
            return self.call(s, frontier)
        raise TypeError(f"cannot build CFG for {type(s).__name__}")

    def loop(self, s: A.While, frontier: list) -> list:
        # the head is the first node evaluated on every iteration; side effects in
        # the test are hoisted into the loop so they rerun each time
        loop = Loop(head=self.next_id, body=set(), parent=self.loop_stack[-1] if self.loop_stack else None)
        self.loop_stack.append(loop)
        first_id = self.next_id
        cond, inner = self.lower(s.cond, [])
        test = self.new(NodeKind.TEST, s.loc, f"[{expr_str(cond)}]", expr=cond)
        if first_id != test.id:
            # hoisted nodes precede the test; the first one is the loop head
            for src, pol in frontier:
                self.nodes[src].succs.append((first_id, pol))
            self.attach(inner, test)
        else:
            self.attach(frontier, test)
        loop.head = first_id
        body_out = self.stmt(s.body, [(test.id, True)])
        for src, pol in body_out:
            self.nodes[src].succs.append((first_id, pol))
        self.loop_stack.pop()
        loop.body.discard(first_id)
        self.loops.append(loop)
        loop.exit_test = test.id
        return [(test.id, False)]

    def call(self, s: A.CallStmt, frontier: list) -> list:
        name = s.name
        args = []
        for a in s.args:
            if name == "create" and a is s.args[1]:
                args.append(a)
                continue
            pure, frontier = self.lower(a, frontier)
            args.append(pure)
        text = f"{name}({', '.join(expr_str(a) for a in args)});"
        if name == "assert":
            node = self.new(NodeKind.ASSERT, s.loc, text, expr=args[0])
        elif name == "assume":
            node = self.new(NodeKind.ASSUME, s.loc, text, expr=args[0])
        elif name == "lock":
            self.pc.blocking = True
            n1 = self.new(NodeKind.LOCK, s.loc, text, args=args)
            frontier = self.attach(frontier, n1)
            node = self.new(NodeKind.LOCK_RETRY, s.loc, text, args=args)
        elif name == "unlock":
            node = self.new(NodeKind.UNLOCK, s.loc, text, args=args)
        elif name == "wait":
            self.pc.blocking = True
            n1 = self.new(NodeKind.WAIT_RELEASE, s.loc, text, args=args)
            frontier = self.attach(frontier, n1)
            n2 = self.new(NodeKind.WAIT_CHECK, s.loc, text, args=args)
            frontier = self.attach(frontier, n2)
            n3 = self.new(NodeKind.LOCK, s.loc, text, args=[args[1]])
            frontier = self.attach(frontier, n3)
            node = self.new(NodeKind.LOCK_RETRY, s.loc, text, args=[args[1]])
        elif name == "signal":
            node = self.new(NodeKind.SIGNAL, s.loc, text, args=args)
        elif name == "broadcast":
            node = self.new(NodeKind.BROADCAST, s.loc, text, args=args)
        elif name == "create":
            node = self.new(NodeKind.CREATE, s.loc, text, args=args)
        elif name == "join":
            self.pc.blocking = True
            node = self.new(NodeKind.JOIN, s.loc, text, args=args)
        elif name == "exit":
            node = self.new(NodeKind.EXIT, s.loc, text)
            self.attach(frontier, node)
            return []  # nothing follows an explicit exit
        elif name == "atomic_begin":
            node = self.new(NodeKind.ATOMIC_BEGIN, s.loc, text)
        elif name == "atomic_end":
            node = self.new(NodeKind.ATOMIC_END, s.loc, text)
        else:
            raise ValueError(f"unknown intrinsic {name}")
        return self.attach(frontier, node)


def _decl_text(ty: A.MtcType, name: str) -> str:
    if ty.kind == "array":
        return f"int {name}[{ty.length}]"
    return f"{ty.kind} {name}"


class _ProgramBuilder:
    def __init__(self, typed: TypedProgram):
        self.typed = typed
        self.blocking = False


def _remove_unreachable(cfg: ThreadCfg) -> None:
    seen = {cfg.entry}
    stack = [cfg.entry]
    while stack:
        n = stack.pop()
        for succ, _ in cfg.nodes[n].succs:
            if succ not in seen:
                seen.add(succ)
                stack.append(succ)
    for n in list(cfg.nodes):
        if n not in seen:
            del cfg.nodes[n]
    for loop in cfg.loops:
        loop.body &= seen
    cfg.loops = [lp for lp in cfg.loops if lp.head in seen]


def _annotate(node: Node, func_types: dict[str, A.MtcType], globals_: dict[str, A.MtcType], blocking: bool) -> None:
    reads: set[str] = set()
    writes: set[str] = set()
    k = node.kind
    if k in (NodeKind.ASSIGN, NodeKind.DECL):
        t = node.target
        if isinstance(t, A.Index):
            writes.add(t.base.ident)
            reads |= expr_vars(t.index)
        elif t is not None:
            writes.add(t.ident)  # type: ignore[union-attr]
        reads |= expr_vars(node.expr)
    elif k in (NodeKind.TEST, NodeKind.ASSERT, NodeKind.ASSUME):
        reads |= expr_vars(node.expr)
    elif k == NodeKind.CREATE:
        handle = node.args[0]
        writes.add(handle.ident)  # type: ignore[union-attr]
        for a in node.args[2:]:
            reads |= expr_vars(a)
    elif k == NodeKind.JOIN:
        reads |= expr_vars(node.args[0])
    else:
        for a in node.args:
            names = expr_vars(a)
            reads |= names
            writes |= names
    if k in ALWAYS_VISIBLE or k in (NodeKind.CREATE, NodeKind.EXIT):
        if blocking:
            reads.add(SYNC)
            writes.add(SYNC)
    node.reads = frozenset(reads)
    node.writes = frozenset(writes)

    def is_global(v: str) -> bool:
        return v == SYNC or (v not in func_types and v in globals_)

    node.global_reads = frozenset(v for v in reads if is_global(v))
    node.global_writes = frozenset(v for v in writes if is_global(v))
    touched = (node.global_reads | node.global_writes) - {SYNC}
    node.visible = k in ALWAYS_VISIBLE or bool(touched)


def build_cfg(p: TypedProgram) -> ProgramCfg:
    """One graph per thread definition plus one for ``main``; loops stay cyclic."""
    pb = _ProgramBuilder(p)
    threads: dict[str, ThreadCfg] = {}
    var_types: dict[str, dict[str, A.MtcType]] = {}
    bodies = [(t.name, [prm.name for prm in t.params], t.body) for t in p.program.threads]
    bodies.append(("main", [], p.program.main))
    for name, params, body in bodies:
        types = dict(p.locals.get(name, {}))
        b = _Builder(pb, name, types)
        # a placeholder entry collects the first real node as its successor
        start = b.new(NodeKind.ATOMIC_END, body.loc, "entry")
        frontier = [(start.id, None)]
        frontier = b.block(body.stmts, frontier)
        end = b.new(NodeKind.EXIT, body.loc, "exit")
        b.attach(frontier, end)
        # drop the placeholder: the entry becomes its unique successor
        entry = start.succs[0][0] if start.succs else end.id
        del b.nodes[start.id]
        for lp in b.loops:
            lp.body.discard(start.id)
        cfg = ThreadCfg(name, params, b.nodes, entry, b.loops)
        _remove_unreachable(cfg)
        threads[name] = cfg
        var_types[name] = types
    out = ProgramCfg(p, threads, var_types, dict(p.globals), uses_blocking=pb.blocking)
    for name, cfg in threads.items():
        for node in cfg.nodes.values():
            _annotate(node, var_types[name], p.globals, pb.blocking)
            touched = (node.global_reads | node.global_writes) - {SYNC}
            if node.kind in (NodeKind.ASSIGN, NodeKind.ASSERT, NodeKind.ASSUME, NodeKind.TEST) and len(touched) > 1:
                msg = (
                    f"{node.loc}: statement accesses {len(touched)} globals "
                    f"({', '.join(sorted(touched))}); it is treated as one atomic step"
                )
                out.warnings.append(msg)
                log.warning(msg)
    return out


# ---------------------------------------------------------------------------
# Unrolling
# ---------------------------------------------------------------------------


def unroll(cfg: ThreadCfg, k: int, unwinding_assertions: bool = True) -> ThreadCfg:
    """Acyclic copy of ``cfg`` with each loop unrolled ``k`` times."""
    if k < 1:
        raise ValueError("unwind bound must be >= 1")
    nodes = {nid: copy.copy(n) for nid, n in cfg.nodes.items()}
    for n in nodes.values():
        n.succs = list(n.succs)
    entry = cfg.entry
    next_id = max(nodes, default=-1) + 1
    loops = [Loop(lp.head, set(lp.body), None, lp.exit_test) for lp in cfg.loops]
    index = {id(lp): i for i, lp in enumerate(cfg.loops)}
    for new, old in zip(loops, cfg.loops):
        if old.parent is not None:
            new.parent = loops[index[id(old.parent)]]
    # innermost loops first so outer copies duplicate already-unrolled bodies
    for loop in sorted(loops, key=lambda lp: -lp.depth):
        region = {loop.head} | loop.body
        exit_test = loop.exit_test
        created: set[int] = set()
        copies: list[dict[int, int]] = []
        for _ in range(k + 1):
            mapping = {}
            for nid in sorted(region):
                mapping[nid] = next_id
                next_id += 1
            copies.append(mapping)
        # copy k+1 is only the hoisted prefix and the final test
        for i in range(k + 1):
            last = i == k
            mapping = copies[i]
            for nid in sorted(region):
                if last and not _in_head_prefix(nodes, loop, nid, exit_test):
                    continue
                src = nodes[nid]
                dup = copy.copy(src)
                dup.id = mapping[nid]
                dup.succs = []
                for succ, pol in src.succs:
                    if nid == exit_test and pol is True and last:
                        continue  # replaced by the unwinding tail below
                    if succ == loop.head and nid in region and not (
                        _in_head_prefix(nodes, loop, nid, exit_test) and nid != exit_test
                    ):
                        target = copies[i + 1][loop.head] if not last else None
                    elif succ in region:
                        target = mapping[succ]
                    else:
                        target = succ
                    if target is not None:
                        dup.succs.append((target, pol))
                nodes[dup.id] = dup
                created.add(dup.id)
        final_test = nodes[copies[k][exit_test]]
        exit_targets = [s for s, pol in nodes[exit_test].succs if pol is False]
        after = exit_targets[0] if exit_targets else None
        tail_first: Optional[int] = None
        prev: Optional[Node] = None
        if unwinding_assertions:
            ua = Node(next_id, NodeKind.ASSERT, final_test.loc, "unwinding assertion", expr=A.BoolLit(False, ty=A.BOOL), tag="unwinding")
            nodes[ua.id] = ua
            created.add(ua.id)
            next_id += 1
            tail_first, prev = ua.id, ua
        stop = Node(next_id, NodeKind.ASSUME, final_test.loc, "unwinding bound reached", expr=A.BoolLit(False, ty=A.BOOL))
        nodes[stop.id] = stop
        created.add(stop.id)
        next_id += 1
        if prev is not None:
            prev.succs.append((stop.id, None))
        else:
            tail_first = stop.id
        if after is not None:
            stop.succs.append((after, None))
        final_test.succs.append((tail_first, True))  # type: ignore[arg-type]
        # redirect outside edges into the head to the first copy
        for nid, n in nodes.items():
            if nid in region or nid in created:
                continue
            n.succs = [(copies[0][s] if s == loop.head else s, pol) for s, pol in n.succs]
        if entry == loop.head:
            entry = copies[0][loop.head]
        for nid in region:
            del nodes[nid]
        p = loop.parent
        while p is not None:
            p.body -= region
            p.body |= created
            p = p.parent
        for other in loops:
            if other is not loop and other.head in region:
                raise AssertionError("loop heads must not be shared")
    out = ThreadCfg(cfg.name, list(cfg.params), nodes, entry, [], unwind=k, unwinding_assertions=unwinding_assertions)
    _remove_unreachable(out)
    out.order = linearize(out)
    return out


def _in_head_prefix(nodes: dict[int, Node], loop: Loop, nid: int, exit_test: int) -> bool:
    """True for the loop test and the hoisted nodes that feed it."""
    if nid == exit_test:
        return True
    # hoisted test prefix: the straight chain from the head to the exit test
    cur = loop.head
    seen = set()
    while cur != exit_test and cur not in seen:
        seen.add(cur)
        if cur == nid:
            return True
        succs = nodes[cur].succs
        if len(succs) != 1:
            return False
        cur = succs[0][0]
    return False


def linearize(cfg: ThreadCfg) -> list[int]:
    """Topological order, breaking ties by node id (i.e. creation order)."""
    indeg = {n: 0 for n in cfg.nodes}
    for node in cfg.nodes.values():
        for succ, _ in node.succs:
            indeg[succ] += 1
    heap = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        n = heapq.heappop(heap)
        order.append(n)
        for succ, _ in cfg.nodes[n].succs:
            indeg[succ] -= 1
            if indeg[succ] == 0:
                heapq.heappush(heap, succ)
    if len(order) != len(cfg.nodes):
        raise ValueError(f"thread {cfg.name} still has a cycle")
    return order


def prepare(p: TypedProgram, k: int = 10, unwinding_assertions: bool = True) -> ProgramCfg:
    """Build, unroll and linearize every thread."""
    pc = build_cfg(p)
    pc.threads = {name: unroll(cfg, k, unwinding_assertions) for name, cfg in pc.threads.items()}
    return pc
