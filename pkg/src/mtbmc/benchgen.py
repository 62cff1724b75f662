"""Benchmark program generators.

``gen_bench`` produces the parameterised families used on the command line.
``random_program`` draws from the small-program family used to compare the
checker with the explicit-state oracle: at most three threads including
main, at most four statements per worker, no division and no assignment
expressions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import philosophers

FAMILIES = ("philosophers", "lock-order", "signal-handshake")
VARIANTS = ("unsat", "sat", "buggy")


@dataclass(frozen=True)
class BenchSpec:
    family: str
    n: int
    variant: str = "unsat"

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.n < 1:
            raise ValueError("size must be >= 1")
        if self.family == "lock-order" and self.n < 2 and self.variant != "unsat":
            raise ValueError("a lock-order inversion needs at least two threads")


def gen_bench(spec: BenchSpec) -> str:
    if spec.family == "philosophers":
        return philosophers(spec.n, spec.variant != "unsat")
    if spec.family == "lock-order":
        return lock_order(spec.n, spec.variant != "unsat")
    return signal_handshake(spec.n, spec.variant != "unsat")


def lock_order(n: int, buggy: bool) -> str:
    """``n`` threads in a ring, each taking two neighbouring mutexes.

    The buggy variant takes them in ring order, which closes a cycle; the
    safe one always takes the lower-numbered mutex first.
    """
    k = max(n, 2)
    lines = [f"mutex m{i};" for i in range(k)] + ["int shared;", ""]
    for i in range(n):
        a, b = i % k, (i + 1) % k
        first, second = (a, b) if buggy else (min(a, b), max(a, b))
        lines += [
            f"thread W{i}() {{",
            f"  lock(m{first});",
            f"  lock(m{second});",
            f"  shared = shared + {i + 1};",
            f"  unlock(m{second});",
            f"  unlock(m{first});",
            "}",
            "",
        ]
    lines.append("main {")
    lines += [f"  thread_t t{i};" for i in range(n)]
    lines += [f"  create(t{i}, W{i});" for i in range(n)]
    lines.append("}")
    return "\n".join(lines) + "\n"


def signal_handshake(n: int, buggy: bool) -> str:
    """One producer and ``n`` consumers waiting for a flag.

    The buggy producer forgets to broadcast, so a consumer that starts
    waiting first never wakes up.
    """
    lines = ["mutex m;", "cond c;", "int ready;", "", "thread Producer() {", "  lock(m);", "  ready = 1;"]
    if not buggy:
        lines.append("  broadcast(c);")
    lines += [
        "  unlock(m);",
        "}",
        "",
        "thread Consumer() {",
        "  lock(m);",
        "  while (ready == 0)",
        "    wait(c, m);",
        "  assert(ready == 1);",
        "  unlock(m);",
        "}",
        "",
        "main {",
        "  thread_t p;",
    ]
    lines += [f"  thread_t q{i};" for i in range(n)]
    lines += [f"  create(q{i}, Consumer);" for i in range(n)]
    lines += ["  create(p, Producer);", "}"]
    return "\n".join(lines) + "\n"


# -- random small programs ---------------------------------------------------------

_GLOBALS = ("x", "y")


class _Gen:
    def __init__(self, rng: random.Random, use_mutex: bool):
        self.rng = rng
        self.use_mutex = use_mutex

    def atom(self, names: tuple[str, ...]) -> str:
        if self.rng.random() < 0.4:
            return str(self.rng.randint(0, 3))
        return self.rng.choice(names)

    def expr(self, names: tuple[str, ...]) -> str:
        r = self.rng.random()
        if r < 0.5:
            return self.atom(names)
        op = self.rng.choice(["+", "-", "&", "*"])
        return f"{self.atom(names)} {op} {self.atom(names)}"

    def cond(self, names: tuple[str, ...]) -> str:
        op = self.rng.choice(["==", "!=", "<", "<="])
        return f"{self.atom(names)} {op} {self.atom(names)}"

    def stmt(self, names: tuple[str, ...], budget: int) -> tuple[list[str], int]:
        """One statement and the number of statements it uses."""
        choices = ["assign", "assign", "assert", "nondet"]
        if budget >= 2:
            choices += ["if"]
        if budget >= 3 and self.use_mutex:
            choices += ["locked"]
        kind = self.rng.choice(choices)
        g = self.rng.choice(_GLOBALS)
        if kind == "assign":
            return [f"{g} = {self.expr(names)};"], 1
        if kind == "nondet":
            return [f"{g} = nondet_int();"], 1
        if kind == "assert":
            return [f"assert({self.cond(names)});"], 1
        if kind == "if":
            return [f"if ({self.cond(names)})", f"  {g} = {self.expr(names)};"], 2
        return ["lock(m);", f"{g} = {self.expr(names)};", "unlock(m);"], 3

    def body(self, names: tuple[str, ...], limit: int) -> list[str]:
        out: list[str] = []
        budget = self.rng.randint(1, limit)
        while budget > 0:
            lines, used = self.stmt(names, budget)
            out += lines
            budget -= used
        return out


def random_program(seed: int, max_threads: int = 3, max_stmts: int = 4) -> str:
    """Deterministic random program from the small family."""
    rng = random.Random(seed)
    use_mutex = rng.random() < 0.4
    gen = _Gen(rng, use_mutex)
    workers = rng.randint(1, max(1, max_threads - 1))
    lines = ["int x;", "int y;"]
    if use_mutex:
        lines.append("mutex m;")
    lines.append("")
    for i in range(workers):
        lines.append(f"thread W{i}(int p) {{")
        lines += ["  " + s for s in gen.body(_GLOBALS + ("p",), max_stmts)]
        lines += ["}", ""]
    lines.append("main {")
    lines += [f"  thread_t t{i};" for i in range(workers)]
    lines += [f"  create(t{i}, W{i}, {rng.randint(0, 3)});" for i in range(workers)]
    if rng.random() < 0.5:
        lines += [f"  join(t{i});" for i in range(workers)]
    if rng.random() < 0.7:
        lines.append(f"  assert({gen.cond(_GLOBALS)});")
    lines.append("}")
    return "\n".join(lines) + "\n"
