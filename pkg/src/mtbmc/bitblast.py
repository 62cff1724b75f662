"""Lower terms to CNF with a gate-level Tseitin encoding.

Boolean terms become one literal, bit-vector terms a list of literals with the
least significant bit first.  Gates are structurally hashed, and the two
constant literals are sentinels that never reach a clause, so constant inputs
simplify gates away instead of producing clauses.

Variables listed in ``defs`` are expanded on first use, which slices the
encoding down to the cone of influence of whatever is asserted.
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

from . import terms as T
from .semantics import wrap
from .solver import Cnf

TRUE_LIT = 1 << 62
FALSE_LIT = -TRUE_LIT

Bits = list[int]


class BitBlaster:
    def __init__(self, defs: Optional[Mapping[str, T.Term]] = None, cnf: Optional[Cnf] = None):
        self.cnf = cnf if cnf is not None else Cnf()
        self.defs = dict(defs or {})
        self.gates: dict[tuple, int] = {}
        self.cache: dict[int, object] = {}  # id(term) -> literal or bits
        self._keep: list[T.Term] = []  # terms whose ids are cached
        self.var_bits: dict[str, object] = {}  # free variable name -> literal or bits
        self.empty_clause = False

    # -- clauses ------------------------------------------------------------

    def new_var(self) -> int:
        return self.cnf.new_var()

    def clause(self, lits: Sequence[int]) -> None:
        out = []
        for lit in lits:
            if lit == TRUE_LIT:
                return
            if lit == FALSE_LIT:
                continue
            out.append(lit)
        if not out:
            self.empty_clause = True
        self.cnf.add(out)

    # -- gates --------------------------------------------------------------

    def and2(self, a: int, b: int) -> int:
        if a == FALSE_LIT or b == FALSE_LIT or a == -b:
            return FALSE_LIT
        if a == TRUE_LIT:
            return b
        if b == TRUE_LIT or a == b:
            return a
        if a > b:
            a, b = b, a
        key = ("and", a, b)
        x = self.gates.get(key)
        if x is None:
            x = self.new_var()
            self.cnf.add([-x, a])
            self.cnf.add([-x, b])
            self.cnf.add([x, -a, -b])
            self.gates[key] = x
        return x

    def or2(self, a: int, b: int) -> int:
        return -self.and2(-a, -b)

    def and_n(self, lits: Sequence[int]) -> int:
        kept: list[int] = []
        seen: set[int] = set()
        for lit in lits:
            if lit == FALSE_LIT or -lit in seen:
                return FALSE_LIT
            if lit == TRUE_LIT or lit in seen:
                continue
            seen.add(lit)
            kept.append(lit)
        if not kept:
            return TRUE_LIT
        if len(kept) == 1:
            return kept[0]
        if len(kept) == 2:
            return self.and2(kept[0], kept[1])
        key = ("andn",) + tuple(sorted(kept))
        x = self.gates.get(key)
        if x is None:
            x = self.new_var()
            for lit in kept:
                self.cnf.add([-x, lit])
            self.cnf.add([x] + [-lit for lit in kept])
            self.gates[key] = x
        return x

    def or_n(self, lits: Sequence[int]) -> int:
        return -self.and_n([-lit for lit in lits])

    def xor2(self, a: int, b: int) -> int:
        if a == FALSE_LIT:
            return b
        if b == FALSE_LIT:
            return a
        if a == TRUE_LIT:
            return -b
        if b == TRUE_LIT:
            return -a
        if a == b:
            return FALSE_LIT
        if a == -b:
            return TRUE_LIT
        flip = (a < 0) != (b < 0)
        a, b = abs(a), abs(b)
        if a > b:
            a, b = b, a
        key = ("xor", a, b)
        x = self.gates.get(key)
        if x is None:
            x = self.new_var()
            self.cnf.add([-x, a, b])
            self.cnf.add([-x, -a, -b])
            self.cnf.add([x, -a, b])
            self.cnf.add([x, a, -b])
            self.gates[key] = x
        return -x if flip else x

    def mux(self, c: int, a: int, b: int) -> int:
        """c ? a : b"""
        if c == TRUE_LIT:
            return a
        if c == FALSE_LIT:
            return b
        if a == b:
            return a
        if c < 0:
            c, a, b = -c, b, a
        if a == TRUE_LIT:
            return self.or2(c, b)
        if a == FALSE_LIT:
            return self.and2(-c, b)
        if b == TRUE_LIT:
            return self.or2(-c, a)
        if b == FALSE_LIT:
            return self.and2(c, a)
        if a == -b:
            return -self.xor2(c, a)
        key = ("mux", c, a, b)
        x = self.gates.get(key)
        if x is None:
            x = self.new_var()
            self.cnf.add([-c, -a, x])
            self.cnf.add([-c, a, -x])
            self.cnf.add([c, -b, x])
            self.cnf.add([c, b, -x])
            # redundant but helps propagation when c is unknown
            self.cnf.add([-a, -b, x])
            self.cnf.add([a, b, -x])
            self.gates[key] = x
        return x

    # -- words --------------------------------------------------------------

    @staticmethod
    def const_bits(value: int, width: int) -> Bits:
        u = value & ((1 << width) - 1)
        return [TRUE_LIT if (u >> i) & 1 else FALSE_LIT for i in range(width)]

    def add_bits(self, a: Bits, b: Bits, carry: int = FALSE_LIT) -> Bits:
        out = []
        for x, y in zip(a, b):
            t = self.xor2(x, y)
            out.append(self.xor2(t, carry))
            carry = self.or2(self.and2(x, y), self.and2(carry, t))
        return out

    def neg_bits(self, a: Bits) -> Bits:
        return self.add_bits([-x for x in a], self.const_bits(0, len(a)), TRUE_LIT)

    def sub_bits(self, a: Bits, b: Bits) -> Bits:
        return self.add_bits(a, [-x for x in b], TRUE_LIT)

    def mul_bits(self, a: Bits, b: Bits) -> Bits:
        w = len(a)
        acc = self.const_bits(0, w)
        for i in range(w):
            if b[i] == FALSE_LIT:
                continue
            partial = [FALSE_LIT] * i + [self.and2(a[j], b[i]) for j in range(w - i)]
            acc = self.add_bits(acc, partial)
        return acc

    def mux_bits(self, c: int, a: Bits, b: Bits) -> Bits:
        return [self.mux(c, x, y) for x, y in zip(a, b)]

    def udivrem(self, a: Bits, b: Bits) -> tuple[Bits, Bits]:
        """Restoring division; a divisor of zero gives all-ones and ``a``."""
        w = len(a)
        rem = self.const_bits(0, w + 1)
        divisor = list(b) + [FALSE_LIT]
        q = [FALSE_LIT] * w
        for i in range(w - 1, -1, -1):
            shifted = [a[i]] + rem[:w]
            diff = self.add_bits(shifted, [-x for x in divisor], TRUE_LIT)
            # no borrow out of the w+1 bit subtraction means shifted >= divisor
            ge = self._carry_out(shifted, [-x for x in divisor], TRUE_LIT)
            q[i] = ge
            rem = self.mux_bits(ge, diff, shifted)
        return q, rem[:w]

    def _carry_out(self, a: Bits, b: Bits, carry: int) -> int:
        for x, y in zip(a, b):
            t = self.xor2(x, y)
            carry = self.or2(self.and2(x, y), self.and2(carry, t))
        return carry

    def sdiv_bits(self, a: Bits, b: Bits) -> tuple[Bits, Bits]:
        sa, sb = a[-1], b[-1]
        ua = self.mux_bits(sa, self.neg_bits(a), a)
        ub = self.mux_bits(sb, self.neg_bits(b), b)
        q, r = self.udivrem(ua, ub)
        quo = self.mux_bits(self.xor2(sa, sb), self.neg_bits(q), q)
        rem = self.mux_bits(sa, self.neg_bits(r), r)
        return quo, rem

    def shift_bits(self, a: Bits, b: Bits, left: bool) -> Bits:
        w = len(a)
        fill = FALSE_LIT if left else a[-1]
        cur = list(a)
        overflow: list[int] = []
        for k in range(w):
            amount = 1 << k
            if amount >= w:
                overflow.append(b[k])
                continue
            if left:
                moved = [FALSE_LIT] * amount + cur[: w - amount]
            else:
                moved = cur[amount:] + [fill] * amount
            cur = self.mux_bits(b[k], moved, cur)
        big = self.or_n(overflow)
        return self.mux_bits(big, [fill] * w, cur)

    def ult_bits(self, a: Bits, b: Bits) -> int:
        lt = FALSE_LIT
        for x, y in zip(a, b):
            # at each bit the more significant position decides unless equal
            lt = self.mux(self.xor2(x, y), y, lt)
        return lt

    def slt_bits(self, a: Bits, b: Bits) -> int:
        return self.ult_bits(a[:-1] + [-a[-1]], b[:-1] + [-b[-1]])

    def eq_bits(self, a: Bits, b: Bits) -> int:
        return self.and_n([-self.xor2(x, y) for x, y in zip(a, b)])

    # -- terms --------------------------------------------------------------

    def blast(self, root: T.Term):
        """Literal (bool) or bit list (bit-vector) for ``root``."""
        cache = self.cache
        if id(root) in cache:
            return cache[id(root)]
        stack: list[tuple[T.Term, bool]] = [(root, False)]
        while stack:
            t, ready = stack.pop()
            if id(t) in cache:
                continue
            deps = self._deps(t)
            if not ready:
                stack.append((t, True))
                for d in deps:
                    if id(d) not in cache:
                        stack.append((d, False))
                continue
            cache[id(t)] = self._gate(t, deps)
            self._keep.append(t)
        return cache[id(root)]

    def _deps(self, t: T.Term) -> tuple[T.Term, ...]:
        if t.op == "var" and t.payload in self.defs:
            return (self.defs[t.payload],)
        return t.args

    def _gate(self, t: T.Term, deps: tuple[T.Term, ...]):
        op = t.op
        c = self.cache
        if op == "const":
            if t.sort == T.BOOL:
                return TRUE_LIT if t.payload else FALSE_LIT
            return self.const_bits(t.payload, t.sort)  # type: ignore[arg-type]
        if op == "var":
            if deps:
                val = c[id(deps[0])]
            elif t.sort == T.BOOL:
                val = self.new_var()
            else:
                val = [self.new_var() for _ in range(t.sort)]  # type: ignore[arg-type]
            self.var_bits[t.payload] = val  # type: ignore[index]
            return val
        xs = [c[id(a)] for a in deps]
        if op == "not":
            return -xs[0]
        if op == "and":
            return self.and_n(xs)
        if op == "or":
            return self.or_n(xs)
        if op == "ite":
            if t.sort == T.BOOL:
                return self.mux(xs[0], xs[1], xs[2])
            return self.mux_bits(xs[0], xs[1], xs[2])
        if op == "eq":
            if t.args[0].sort == T.BOOL:
                return -self.xor2(xs[0], xs[1])
            return self.eq_bits(xs[0], xs[1])
        if op == "slt":
            return self.slt_bits(xs[0], xs[1])
        if op == "sle":
            return -self.slt_bits(xs[1], xs[0])
        if op == "bvadd":
            return self.add_bits(xs[0], xs[1])
        if op == "bvsub":
            return self.sub_bits(xs[0], xs[1])
        if op == "bvmul":
            return self.mul_bits(xs[0], xs[1])
        if op == "bvsdiv":
            return self.sdiv_bits(xs[0], xs[1])[0]
        if op == "bvsrem":
            return self.sdiv_bits(xs[0], xs[1])[1]
        if op == "bvand":
            return [self.and2(x, y) for x, y in zip(xs[0], xs[1])]
        if op == "bvor":
            return [self.or2(x, y) for x, y in zip(xs[0], xs[1])]
        if op == "bvxor":
            return [self.xor2(x, y) for x, y in zip(xs[0], xs[1])]
        if op == "bvshl":
            return self.shift_bits(xs[0], xs[1], left=True)
        if op == "bvashr":
            return self.shift_bits(xs[0], xs[1], left=False)
        if op == "bvnot":
            return [-x for x in xs[0]]
        if op == "bvneg":
            return self.neg_bits(xs[0])
        raise ValueError(f"cannot bit-blast operator {op!r}")

    def assert_term(self, t: T.Term) -> None:
        """Add ``t`` as a top-level fact, flattening conjunctions and equalities."""
        todo = [t]
        while todo:
            u = todo.pop()
            if u.op == "and":
                todo.extend(reversed(u.args))
                continue
            if u.op == "eq" and u.args[0].sort != T.BOOL:
                a = self.blast(u.args[0])
                b = self.blast(u.args[1])
                for x, y in zip(a, b):
                    self.assert_iff(x, y)
                continue
            self.clause([self.blast(u)])

    def assert_iff(self, x: int, y: int) -> None:
        if x == y:
            return
        self.clause([-x, y])
        self.clause([x, -y])

    def value_of(self, name: str, model: Sequence[bool], sort) -> Optional[object]:
        bits = self.var_bits.get(name)
        if bits is None:
            return None

        def lit_val(lit: int) -> bool:
            if lit == TRUE_LIT:
                return True
            if lit == FALSE_LIT:
                return False
            v = model[abs(lit)]
            return v if lit > 0 else not v

        if sort == T.BOOL:
            return lit_val(bits)  # type: ignore[arg-type]
        u = sum(1 << i for i, lit in enumerate(bits) if lit_val(lit))  # type: ignore[union-attr]
        return wrap(u, sort)
