"""Verification-condition assembly, CNF lowering and SMT-LIB export.

Three formula shapes are built from the interleaving tree:

* ``encode_lazy``: one path, its SSA definitions and the disjunction of its
  violated-property terms;
* ``encode_schedule``: the whole tree in one formula.  Every context switch
  to a different thread opens a new block ``b`` with a selection variable
  ``ts_b``; a step is gated by the conjunction of the selections leading to
  it (its schedule guard);
* ``encode_uw``: the schedule formula plus one control literal per distinct
  schedule guard.  Assuming a literal forces its guard false, so the solver
  sees an under-approximation, and the unsat core names the literals worth
  relaxing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from . import terms as T
from .bitblast import FALSE_LIT, TRUE_LIT, BitBlaster
from .solver import Cnf
from .symex import Def, Obligation, SsaTrace, StepRecord, TreeNode


@dataclass(frozen=True)
class Goal:
    """One disjunct of the property: ``term`` holds iff the obligation fails."""

    term: T.Term
    obligation: Obligation
    node: Optional[TreeNode] = None


@dataclass
class Schedule:
    """Selection variables per block and the thread ids each may take."""

    domains: dict[int, list[int]] = field(default_factory=dict)
    width: int = 2

    @property
    def blocks(self) -> int:
        return len(self.domains) + 1  # block 0 belongs to main and needs no variable

    def var(self, b: int) -> T.Term:
        return T.Var(f"ts{b}", self.width)

    def guard(self, b: int, tid: int) -> T.Term:
        return T.Eq(self.var(b), T.BvConst(tid, self.width))

    def constraints(self) -> list[T.Term]:
        return [T.Or(*(self.guard(b, t) for t in dom)) for b, dom in sorted(self.domains.items())]


@dataclass
class Formula:
    defs: dict[str, T.Term] = field(default_factory=dict)
    constraints: list[T.Term] = field(default_factory=list)
    goals: list[Goal] = field(default_factory=list)
    selectors: dict[str, T.Term] = field(default_factory=dict)  # name -> guard it forces false
    schedule: Optional[Schedule] = None

    @property
    def property(self) -> T.Term:
        return T.Or(*(g.term for g in self.goals))

    def restrict(self, keep) -> "Formula":
        """Same formula with only the goals accepted by ``keep``."""
        return Formula(
            self.defs,
            self.constraints,
            [g for g in self.goals if keep(g)],
            self.selectors,
            self.schedule,
        )


def _real(g: Goal) -> bool:
    return g.obligation.tag != "unwinding"


def real_goals(f: Formula) -> Formula:
    return f.restrict(_real)


def unwinding_goals(f: Formula) -> Formula:
    return f.restrict(lambda g: not _real(g))


# -- construction ---------------------------------------------------------------------


def encode_lazy(leaf: TreeNode) -> Formula:
    """Formula for the single interleaving ending at ``leaf``."""
    return _path_formula([n.record for n in leaf.path()], leaf.obligations(), leaf)  # type: ignore[misc]


def encode_trace(trace: SsaTrace) -> Formula:
    """Formula for an explicitly scheduled trace."""
    return _path_formula(trace.steps, trace.obligations, None)


def _path_formula(records: Sequence[StepRecord], obligations: Sequence[Obligation], node: Optional[TreeNode]) -> Formula:
    f = Formula()
    for rec in records:
        for d in rec.defs:
            f.defs[d.sym] = d.term
    for ob in obligations:
        if not ob.term.is_false():
            f.goals.append(Goal(ob.term, ob, node))
    return f


@dataclass
class Blocks:
    """Block number and schedule guard of every tree node."""

    block: dict[int, int]
    guard: dict[int, T.Term]
    thread: dict[int, int]
    schedule: Schedule


def assign_blocks(root: TreeNode) -> Blocks:
    block = {root.id: 0}
    thread = {root.id: 0}
    raw: dict[int, tuple] = {root.id: ()}
    domains: dict[int, set[int]] = {}
    max_tid = 0
    stack = [root]
    while stack:
        n = stack.pop()
        for c in n.children:
            rec = c.record
            max_tid = max(max_tid, rec.tid)
            if rec.effective and rec.tid != thread[n.id]:
                b = block[n.id] + 1
                block[c.id], thread[c.id] = b, rec.tid
                raw[c.id] = raw[n.id] + ((b, rec.tid),)
                domains.setdefault(b, set()).add(rec.tid)
            else:
                block[c.id], thread[c.id], raw[c.id] = block[n.id], thread[n.id], raw[n.id]
            stack.append(c)
    sched = Schedule({b: sorted(d) for b, d in sorted(domains.items())}, max(2, max_tid.bit_length() + 1))
    guard = {nid: T.And(*(sched.guard(b, t) for b, t in pairs)) for nid, pairs in raw.items()}
    return Blocks(block, guard, thread, sched)


def _walk(root: TreeNode) -> Iterable[TreeNode]:
    stack = [root]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children))


def encode_schedule(
    root: TreeNode, leaves: Sequence[TreeNode], extra: Sequence[T.Term] = (), blocks: Optional[Blocks] = None
) -> Formula:
    """All interleavings of the tree in one formula, gated by schedule guards."""
    bl = blocks if blocks is not None else assign_blocks(root)
    f = Formula(schedule=bl.schedule)
    f.constraints.extend(bl.schedule.constraints())
    f.constraints.extend(extra)
    keep = _nodes_on_paths(leaves)
    for n in _walk(root):
        if n.record is None or n.id not in keep:
            continue
        sg = bl.guard[n.id]
        for ev in n.record.events:
            if isinstance(ev, Def):
                f.defs[ev.sym] = T.Ite(sg, ev.term, ev.old)
            elif isinstance(ev, Obligation):
                f.goals.append(Goal(T.And(sg, ev.term), ev, n))
        for ob in n.leaf_obligations:
            f.goals.append(Goal(T.And(sg, ob.term), ob, n))
    f.goals = [g for g in f.goals if not g.term.is_false()]
    return f


def _nodes_on_paths(leaves: Sequence[TreeNode]) -> set[int]:
    out: set[int] = set()
    for leaf in leaves:
        n: Optional[TreeNode] = leaf
        while n is not None and n.id not in out:
            out.add(n.id)
            n = n.parent
    return out


@dataclass
class ControlLiterals:
    """Named selectors over schedule guards; ``active`` ones are assumed."""

    guards: dict[str, T.Term]
    order: list[str]
    active: list[str]

    def relax(self, names: Iterable[str]) -> None:
        drop = set(names)
        self.active = [n for n in self.active if n not in drop]


def control_literals(root: TreeNode, blocks: Blocks) -> ControlLiterals:
    """One literal per distinct non-trivial guard, shortest guards first."""
    seen: dict[int, tuple[int, int, T.Term]] = {}
    for pos, n in enumerate(_walk(root)):
        if n.record is None or not n.record.effective:
            continue
        g = blocks.guard[n.id]
        if g.is_true() or id(g) in seen:
            continue
        size = len(g.args) if g.op == "and" else 1
        seen[id(g)] = (size, pos, g)
    ranked = sorted(seen.values(), key=lambda x: (x[0], x[1]))
    guards = {f"l{i}": g for i, (_, _, g) in enumerate(ranked)}
    names = list(guards)
    return ControlLiterals(guards, names, list(names))


def encode_uw(base: Formula, lits: ControlLiterals) -> Formula:
    return Formula(base.defs, base.constraints, base.goals, dict(lits.guards), base.schedule)


# -- lowering -------------------------------------------------------------------------


@dataclass
class Encoded:
    cnf: Cnf
    blaster: BitBlaster
    selectors: dict[str, int]  # selector name -> CNF variable
    trivially_unsat: bool = False

    def assumptions(self, names: Iterable[str]) -> list[int]:
        return [self.selectors[n] for n in names]

    def names_of(self, core: Iterable[int]) -> list[str]:
        rev = {v: k for k, v in self.selectors.items()}
        return [rev[abs(lit)] for lit in core if abs(lit) in rev]


def bitblast(f: Formula) -> Encoded:
    bb = BitBlaster(f.defs)
    for c in f.constraints:
        bb.assert_term(c)
    prop = f.property
    if prop.is_false():
        bb.clause([FALSE_LIT])
    else:
        bb.clause([bb.blast(prop)])
    sels: dict[str, int] = {}
    for name, g in f.selectors.items():
        s = bb.new_var()
        sels[name] = s
        lit = bb.blast(g)
        if lit == TRUE_LIT:
            bb.clause([-s])
        elif lit != FALSE_LIT:
            bb.clause([-s, -lit])
    return Encoded(bb.cnf, bb, sels, bb.empty_clause)


# -- SMT-LIB ---------------------------------------------------------------------------


def _sort(s) -> str:
    return "Bool" if s == T.BOOL else f"(_ BitVec {s})"


def _sym(name: str) -> str:
    return f"|{name}|"


_SMT_OPS = {
    "not": "not",
    "and": "and",
    "or": "or",
    "ite": "ite",
    "eq": "=",
    "slt": "bvslt",
    "sle": "bvsle",
    "bvadd": "bvadd",
    "bvsub": "bvsub",
    "bvmul": "bvmul",
    "bvsdiv": "bvsdiv",
    "bvsrem": "bvsrem",
    "bvand": "bvand",
    "bvor": "bvor",
    "bvxor": "bvxor",
    "bvshl": "bvshl",
    "bvashr": "bvashr",
    "bvneg": "bvneg",
    "bvnot": "bvnot",
}


def _const(t: T.Term) -> str:
    if t.sort == T.BOOL:
        return "true" if t.payload else "false"
    w = t.sort
    return f"(_ bv{t.payload % (1 << w)} {w})"


def to_smtlib(f: Formula, assume: Optional[Sequence[str]] = None) -> str:
    """SMT-LIB2 script (QF_BV) equisatisfiable with ``f``.

    SSA definitions and shared subterms become ``define-fun``s.  Selectors are
    checked with ``check-sat-assuming`` (all of them unless ``assume`` names a
    subset), so ``(get-unsat-core)`` reports the selectors in the core.
    """
    names: dict[int, str] = {}
    decls: list[str] = []
    body: list[str] = []

    def deps(u: T.Term) -> tuple[T.Term, ...]:
        if u.op == "var" and u.payload in f.defs:
            return (f.defs[u.payload],)
        return u.args

    def emit(root: T.Term) -> str:
        stack = [(root, False)]
        while stack:
            u, ready = stack.pop()
            if id(u) in names:
                continue
            if not ready:
                stack.append((u, True))
                stack.extend((d, False) for d in deps(u) if id(d) not in names)
                continue
            if u.op == "const":
                names[id(u)] = _const(u)
            elif u.op == "var":
                if u.payload in f.defs:
                    inner = names[id(f.defs[u.payload])]
                    body.append(f"(define-fun {_sym(u.payload)} () {_sort(u.sort)} {inner})")
                else:
                    decls.append(f"(declare-fun {_sym(u.payload)} () {_sort(u.sort)})")
                names[id(u)] = _sym(u.payload)
            else:
                args = " ".join(names[id(a)] for a in u.args)
                ident = f"t{len(body)}"
                body.append(f"(define-fun {ident} () {_sort(u.sort)} ({_SMT_OPS[u.op]} {args}))")
                names[id(u)] = ident
        return names[id(root)]

    asserts = [f"(assert {emit(c)})" for c in f.constraints]
    asserts.append(f"(assert {emit(f.property)})")
    for name, g in f.selectors.items():
        decls.append(f"(declare-fun {_sym(name)} () Bool)")
        asserts.append(f"(assert (! (=> {_sym(name)} (not {emit(g)})) :named sel_{name}))")
    out = ["(set-logic QF_BV)", "(set-option :produce-unsat-cores true)"] + decls + body + asserts
    chosen = list(f.selectors) if assume is None else list(assume)
    if chosen:
        out.append(f"(check-sat-assuming ({' '.join(_sym(n) for n in chosen)}))")
    else:
        out.append("(check-sat)")
    return "\n".join(out) + "\n"
