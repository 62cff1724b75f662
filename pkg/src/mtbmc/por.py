"""Partial-order reduction over visible statements and read/write sets.

Visible-instruction reduction lives in the step definition (invisible
statements never start a step).  This module supplies the read-write
analysis: at a state, a thread whose remaining global accesses cannot
conflict with any other live thread is explored alone.

Arrays are tracked as a whole, so ``a[i]`` and ``a[j]`` always conflict.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .cfg import Node, NodeKind, ProgramCfg, ThreadCfg


class AccessClass(Enum):
    EQUIVALENT = "equivalent"
    NON_EQUIVALENT = "non-equivalent"


@dataclass(frozen=True)
class Access:
    """Globals read and written by a statement or a thread suffix."""

    reads: frozenset[str] = frozenset()
    writes: frozenset[str] = frozenset()

    def __or__(self, other: "Access") -> "Access":
        return Access(self.reads | other.reads, self.writes | other.writes)

    @classmethod
    def of(cls, node: Node) -> "Access":
        return cls(node.global_reads, node.global_writes)


EMPTY = Access()


def visible(node: Node) -> bool:
    """True iff the statement touches a global or synchronizes."""
    return node.visible


def conflicts(a: Access, b: Access) -> bool:
    return bool(a.writes & (b.reads | b.writes)) or bool(a.reads & b.writes)


def classify_pair(a: Node | Access, b: Node | Access) -> AccessClass:
    """Swapping two statements matters only if they share a variable one of them writes."""
    x = a if isinstance(a, Access) else Access.of(a)
    y = b if isinstance(b, Access) else Access.of(b)
    return AccessClass.NON_EQUIVALENT if conflicts(x, y) else AccessClass.EQUIVALENT


def rw_independent(j: int, others: Iterable[int], rw: dict[int, Access]) -> bool:
    """WR_j misses everything the others touch and RD_j misses what they write."""
    mine = rw[j]
    touched: set[str] = set()
    written: set[str] = set()
    for k in others:
        if k == j:
            continue
        touched |= rw[k].reads | rw[k].writes
        written |= rw[k].writes
    return not (mine.writes & touched) and not (mine.reads & written)


class RwSets:
    """Static remaining-access sets for every thread function and program counter."""

    def __init__(self, program: ProgramCfg):
        self.program = program
        self._bodies: dict[str, Access] = {}
        self._suffix: dict[str, list[Access]] = {}

    def body(self, func: str, _stack: Optional[set[str]] = None) -> Access:
        """Everything ``func`` may touch, including threads it creates."""
        if func in self._bodies:
            return self._bodies[func]
        stack = _stack if _stack is not None else set()
        if func in stack:
            return EMPTY  # recursive creation: the outer call already collects it
        stack.add(func)
        acc = EMPTY
        for node in self.program.threads[func].nodes.values():
            acc = acc | self._node(node, stack)
        stack.discard(func)
        if not stack:
            self._bodies[func] = acc
        return acc

    def _node(self, node: Node, stack: Optional[set[str]] = None) -> Access:
        acc = Access.of(node)
        if node.kind is NodeKind.CREATE:
            acc = acc | self.body(node.args[1].ident, stack)  # type: ignore[union-attr]
        return acc

    def suffix(self, func: str, pc: int) -> Access:
        table = self._suffix.get(func)
        if table is None:
            cfg: ThreadCfg = self.program.threads[func]
            table = [EMPTY] * (len(cfg.order) + 1)
            for p in range(len(cfg.order) - 1, -1, -1):
                table[p] = table[p + 1] | self._node(cfg.nodes[cfg.order[p]])
            self._suffix[func] = table
        return table[min(pc, len(table) - 1)]


def choose(rw: RwSets, threads: list[tuple[int, str, int]], candidates: list[int]) -> list[int]:
    """Reduce ``candidates`` to a single independent thread when one exists.

    ``threads`` lists every live thread as ``(tid, func, pc)``.
    """
    if len(candidates) < 2:
        return candidates
    sets = {tid: rw.suffix(func, pc) for tid, func, pc in threads}
    live = [tid for tid, _, _ in threads]
    for j in sorted(candidates):
        if rw_independent(j, live, sets):
            return [j]
    return candidates
