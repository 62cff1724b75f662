"""CDCL SAT solver with assumptions and unsat cores over assumptions.

Literals use the DIMACS convention at the interface: variable ``v`` is the
positive integer ``v`` and its negation is ``-v``.  Internally a literal is
``2*v`` (positive) or ``2*v + 1`` (negative), so ``lit ^ 1`` negates.

The search is textbook: two watched literals, first-UIP conflict analysis with
basic clause minimization, VSIDS branching kept in a lazy binary heap, phase
saving, Luby restarts and activity/LBD based deletion of learnt clauses.
Assumptions are decided first, one per decision level; when one of them is
falsified the final-conflict analysis collects the assumptions it depends on.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence


class Status(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"  # conflict limit reached


@dataclass
class SolverStats:
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0
    restarts: int = 0
    learnt: int = 0
    deleted: int = 0


@dataclass
class SolveResult:
    status: Status
    model: Optional[list[bool]] = None  # index v holds the value of variable v
    core: Optional[list[int]] = None  # subset of the assumptions, DIMACS literals
    stats: SolverStats = field(default_factory=SolverStats)

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def unsat(self) -> bool:
        return self.status is Status.UNSAT

    def value(self, lit: int) -> bool:
        assert self.model is not None
        v = self.model[abs(lit)]
        return v if lit > 0 else not v


@dataclass
class Cnf:
    num_vars: int = 0
    clauses: list[list[int]] = field(default_factory=list)

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add(self, clause: Iterable[int]) -> None:
        self.clauses.append(list(clause))

    def to_dimacs(self, assumptions: Sequence[int] = ()) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        if assumptions:
            lines.insert(0, "c assumptions " + " ".join(str(a) for a in assumptions))
        lines.extend(" ".join(map(str, c)) + " 0" for c in self.clauses)
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> Cnf:
    cnf = Cnf()
    current: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            cnf.num_vars = int(line.split()[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                cnf.clauses.append(current)
                current = []
            else:
                current.append(lit)
    if current:
        cnf.clauses.append(current)
    return cnf


def _luby(i: int) -> int:
    """i-th element (0-based) of the Luby sequence 1 1 2 1 1 2 4 ..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i = i % size
    return 1 << seq


class Solver:
    RESTART_UNIT = 100
    VAR_DECAY = 0.95

    def __init__(
        self,
        cnf: Cnf,
        seed: int = 0,
        conflict_limit: Optional[int] = None,
    ):
        n = cnf.num_vars
        self.n = n
        self.conflict_limit = conflict_limit
        self.stats = SolverStats()
        self.val: list[int] = [-1] * (2 * n + 2)  # per literal: 1 true, 0 false, -1 unset
        self.level: list[int] = [0] * (n + 1)
        self.reason: list[Optional[list[int]]] = [None] * (n + 1)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.watches: list[list[list[int]]] = [[] for _ in range(2 * n + 2)]
        self.learnts: list[list[int]] = []
        self.lbd: dict[int, int] = {}
        self.deleted: set[int] = set()
        self.phase = [False] * (n + 1)
        rng = random.Random(seed)
        # a tiny seeded jitter makes the initial branching order depend on the seed only
        self.activity = [rng.random() * 1e-5 for _ in range(n + 1)]
        self.var_inc = 1.0
        self.heap: list[tuple[float, int]] = [(-self.activity[v], v) for v in range(1, n + 1)]
        heapq.heapify(self.heap)
        self.seen = [0] * (n + 1)
        self.ok = True
        self.max_learnts = max(1000, len(cnf.clauses) // 3)
        for clause in cnf.clauses:
            if not self._add_input_clause(clause):
                self.ok = False
                break
        if self.ok and self._propagate() is not None:
            self.ok = False

    # -- clause database ----------------------------------------------------

    def _add_input_clause(self, clause: Sequence[int]) -> bool:
        lits: list[int] = []
        seen: set[int] = set()
        for d in clause:
            v = abs(d)
            if v == 0 or v > self.n:
                raise ValueError(f"literal {d} references an undeclared variable")
            lit = 2 * v + (1 if d < 0 else 0)
            if lit ^ 1 in seen:
                return True  # tautology
            if lit in seen:
                continue
            seen.add(lit)
            lits.append(lit)
        # drop literals already false at level 0, satisfy if already true
        kept = []
        for lit in lits:
            if self.val[lit] == 1:
                return True
            if self.val[lit] == -1:
                kept.append(lit)
        if not kept:
            return False
        if len(kept) == 1:
            self._enqueue(kept[0], None)
            return True
        self.watches[kept[0]].append(kept)
        self.watches[kept[1]].append(kept)
        return True

    def _enqueue(self, lit: int, reason: Optional[list[int]]) -> None:
        self.val[lit] = 1
        self.val[lit ^ 1] = 0
        v = lit >> 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    # -- propagation --------------------------------------------------------

    def _propagate(self) -> Optional[list[int]]:
        val = self.val
        watches = self.watches
        trail = self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            watches[false_lit] = kept = []
            self.stats.propagations += 1
            i = 0
            n_ws = len(ws)
            while i < n_ws:
                c = ws[i]
                i += 1
                if c[0] == false_lit:
                    c[0], c[1] = c[1], false_lit
                first = c[0]
                if val[first] == 1:
                    kept.append(c)
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != 0:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append(c)
                        break
                else:
                    kept.append(c)
                    if val[first] == 0:
                        kept.extend(ws[i:])
                        self.qhead = len(trail)
                        return c
                    self._enqueue(first, c)
        return None

    # -- conflict analysis --------------------------------------------------

    def _bump(self, v: int) -> None:
        act = self.activity
        act[v] += self.var_inc
        if act[v] > 1e100:
            for u in range(1, self.n + 1):
                act[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-act[u], u) for u in range(1, self.n + 1) if self.val[2 * u] == -1]
            heapq.heapify(self.heap)
        elif self.val[2 * v] == -1:
            heapq.heappush(self.heap, (-act[v], v))

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        seen = self.seen
        level = self.level
        cur = len(self.trail_lim)
        learnt = [0]
        pathc = 0
        p = -1
        idx = len(self.trail) - 1
        touched: list[int] = []
        while True:
            for q in confl if p == -1 else confl[1:]:
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    touched.append(v)
                    self._bump(v)
                    if level[v] >= cur:
                        pathc += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[idx] >> 1]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            v = p >> 1
            confl = self.reason[v]  # type: ignore[assignment]
            seen[v] = 0
            pathc -= 1
            if pathc == 0:
                break
            if confl[0] != p:
                # the reason's implied literal must come first
                j = confl.index(p)
                confl[0], confl[j] = confl[j], confl[0]
        learnt[0] = p ^ 1
        # basic minimization: drop literals whose reason is already covered
        keep = [learnt[0]]
        for q in learnt[1:]:
            r = self.reason[q >> 1]
            if r is None:
                keep.append(q)
                continue
            if any(not seen[x >> 1] and level[x >> 1] > 0 for x in r if x != q ^ 1):
                keep.append(q)
        for v in touched:
            seen[v] = 0
        learnt = keep
        if len(learnt) == 1:
            back = 0
        else:
            best = 1
            for k in range(2, len(learnt)):
                if level[learnt[k] >> 1] > level[learnt[best] >> 1]:
                    best = k
            learnt[1], learnt[best] = learnt[best], learnt[1]
            back = level[learnt[1] >> 1]
        self.var_inc /= self.VAR_DECAY
        return learnt, back

    def _analyze_final(self, a: int) -> list[int]:
        """Assumptions (internal literals) that together falsify assumption ``a``."""
        core = [a]
        if not self.trail_lim:
            return core
        seen = self.seen
        seen[a >> 1] = 1
        for i in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            lit = self.trail[i]
            v = lit >> 1
            if not seen[v]:
                continue
            r = self.reason[v]
            if r is None:
                if self.level[v] > 0:
                    core.append(lit)
            else:
                for q in r[1:]:
                    if self.level[q >> 1] > 0:
                        seen[q >> 1] = 1
            seen[v] = 0
        seen[a >> 1] = 0
        return core

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        val = self.val
        for i in range(len(self.trail) - 1, start - 1, -1):
            lit = self.trail[i]
            v = lit >> 1
            val[lit] = -1
            val[lit ^ 1] = -1
            self.reason[v] = None
            self.phase[v] = (lit & 1) == 0
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _pick_branch(self) -> int:
        heap = self.heap
        val = self.val
        while heap:
            _, v = heapq.heappop(heap)
            if val[2 * v] == -1:
                return 2 * v + (0 if self.phase[v] else 1)
        return -1

    def _reduce_db(self) -> None:
        locked = set()
        for lit in self.trail:
            r = self.reason[lit >> 1]
            if r is not None:
                locked.add(id(r))
        ranked = sorted(
            self.learnts, key=lambda c: (self.lbd.get(id(c), 0), len(c)), reverse=True
        )
        drop = len(ranked) // 2
        survivors = []
        gone = 0
        for c in ranked:
            if gone < drop and id(c) not in locked and self.lbd.get(id(c), 0) > 2:
                self.deleted.add(id(c))
                self.lbd.pop(id(c), None)
                gone += 1
            else:
                survivors.append(c)
        self.learnts = survivors
        self.stats.deleted += gone
        # purge deleted clauses from the watch lists right away so ids cannot be reused
        if gone:
            dead = self.deleted
            self.watches = [[c for c in ws if id(c) not in dead] for ws in self.watches]
            self.deleted = set()

    # -- main loop ----------------------------------------------------------

    def solve(self, assumptions: Sequence[int] = ()) -> SolveResult:
        if not self.ok:
            return SolveResult(Status.UNSAT, core=[], stats=self.stats)
        assumps: list[int] = []
        for d in assumptions:
            v = abs(d)
            if v == 0 or v > self.n:
                raise ValueError(f"assumption {d} references an undeclared variable")
            assumps.append(2 * v + (1 if d < 0 else 0))
        restart_idx = 0
        budget = _luby(restart_idx) * self.RESTART_UNIT
        since_restart = 0
        while True:
            confl = self._propagate()
            if confl is not None:
                self.stats.conflicts += 1
                since_restart += 1
                if not self.trail_lim:
                    self.ok = False
                    return SolveResult(Status.UNSAT, core=[], stats=self.stats)
                if self.conflict_limit is not None and self.stats.conflicts >= self.conflict_limit:
                    self._cancel_until(0)
                    return SolveResult(Status.UNKNOWN, stats=self.stats)
                learnt, back = self._analyze(confl)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    levels = {self.level[q >> 1] for q in learnt}
                    self.watches[learnt[0]].append(learnt)
                    self.watches[learnt[1]].append(learnt)
                    self.learnts.append(learnt)
                    self.lbd[id(learnt)] = len(levels)
                    self.stats.learnt += 1
                    self._enqueue(learnt[0], learnt)
                continue
            if since_restart >= budget:
                self.stats.restarts += 1
                restart_idx += 1
                budget = _luby(restart_idx) * self.RESTART_UNIT
                since_restart = 0
                self._cancel_until(0)
                continue
            if len(self.learnts) - len(self.trail) >= self.max_learnts:
                self._reduce_db()
                self.max_learnts = int(self.max_learnts * 1.1)
            lit = -1
            while len(self.trail_lim) < len(assumps):
                a = assumps[len(self.trail_lim)]
                if self.val[a] == 1:
                    self.trail_lim.append(len(self.trail))  # dummy level
                elif self.val[a] == 0:
                    core = self._analyze_final(a)
                    out = sorted({self._to_dimacs(q) for q in core}, key=lambda x: (abs(x), x))
                    self._cancel_until(0)
                    return SolveResult(Status.UNSAT, core=out, stats=self.stats)
                else:
                    lit = a
                    break
            if lit == -1:
                lit = self._pick_branch()
                if lit == -1:
                    model = [False] * (self.n + 1)
                    for v in range(1, self.n + 1):
                        model[v] = self.val[2 * v] == 1
                    self._cancel_until(0)
                    return SolveResult(Status.SAT, model=model, stats=self.stats)
                self.stats.decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)

    @staticmethod
    def _to_dimacs(lit: int) -> int:
        v = lit >> 1
        return -v if lit & 1 else v


def solve(
    cnf: Cnf,
    assumptions: Sequence[int] = (),
    seed: int = 0,
    conflict_limit: Optional[int] = None,
) -> SolveResult:
    """Decide ``cnf`` under ``assumptions`` with a fresh solver instance."""
    return Solver(cnf, seed=seed, conflict_limit=conflict_limit).solve(assumptions)


def check_model(cnf: Cnf, model: Sequence[bool]) -> bool:
    return all(any(model[abs(d)] == (d > 0) for d in c) for c in cnf.clauses)
