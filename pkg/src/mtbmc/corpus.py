"""Built-in MTC programs: the running two-thread example and small benchmarks.

``philosophers(n, sat)`` generates the dining-philosophers family: each
philosopher takes both neighbouring forks, eats and puts them back inside a
single atomic block.  The unsafe variant asserts that
somebody is still hungry, which fails for whichever philosopher eats last on
every interleaving; the safe variant asserts that the forks are free again.
"""

from __future__ import annotations

RUNNING_EXAMPLE = """\
int a[10];
int i;
int j = 1;
int x = 2;

thread Tx(int arg) {
  if (x > 2) {
    a[i] = arg;
    assert(i >= 0 && i < 10);
  }
}

thread Ty(int arg) {
  if (x > 3)
    a[j] = arg;
  else
    x = 3;
}

main {
  thread_t id1;
  thread_t id2;
  int arg1 = 10;
  int arg2 = 20;
  i = nondet_int();
  create(id1, Tx, arg1);
  create(id2, Ty, arg2);
}
"""


def philosophers(n: int, sat: bool) -> str:
    """Dining philosophers with ``n`` threads; ``sat`` selects the failing property."""
    if n < 1:
        raise ValueError("need at least one philosopher")
    lines = [f"int fork[{n}];", "int eating;", "int ate;", ""]
    lines += [
        "thread Phil(int id) {",
        "  atomic {",
        "    fork[id] = fork[id] + 1;",
        f"    fork[(id + 1) % {n}] = fork[(id + 1) % {n}] + 1;",
        "    eating = eating + 1;",
        "    ate = ate + 1;",
        "    eating = eating - 1;",
        "    fork[id] = fork[id] - 1;",
        f"    fork[(id + 1) % {n}] = fork[(id + 1) % {n}] - 1;",
    ]
    if sat:
        # claims somebody is still hungry; false for whoever eats last
        lines.append(f"    assert(ate < {n});")
    else:
        lines.append("    assert(eating == 0 && fork[id] == 0);")
    lines += ["  }", "}", "", "main {"]
    for k in range(n):
        lines.append(f"  thread_t t{k};")
    for k in range(n):
        lines.append(f"  create(t{k}, Phil, {k});")
    lines.append("}")
    return "\n".join(lines) + "\n"


LOCK_ORDER = """\
mutex m1;
mutex m2;
int shared;

thread A() {
  lock(m1);
  lock(m2);
  shared = shared + 1;
  unlock(m2);
  unlock(m1);
}

thread B() {
  lock(m2);
  lock(m1);
  shared = shared + 2;
  unlock(m1);
  unlock(m2);
}

main {
  thread_t a;
  thread_t b;
  create(a, A);
  create(b, B);
}
"""

LOCK_SAFE = """\
mutex m;
int counter;

thread Inc() {
  lock(m);
  counter = counter + 1;
  unlock(m);
}

main {
  thread_t a;
  thread_t b;
  create(a, Inc);
  create(b, Inc);
  join(a);
  join(b);
  assert(counter == 2);
}
"""

SIGNAL_HANDSHAKE = """\
mutex m;
cond c;
int ready;

thread Producer() {
  lock(m);
  ready = 1;
  signal(c);
  unlock(m);
}

thread Consumer() {
  lock(m);
  while (ready == 0)
    wait(c, m);
  assert(ready == 1);
  unlock(m);
}

main {
  thread_t p;
  thread_t q;
  create(q, Consumer);
  create(p, Producer);
}
"""

DOUBLE_UNLOCK = """\
mutex m;
int x;

thread W() {
  lock(m);
  x = 1;
  unlock(m);
  unlock(m);
}

main {
  thread_t t;
  create(t, W);
}
"""

WAIT_NO_SIGNAL = """\
mutex m;
cond c;

thread Waiter() {
  lock(m);
  wait(c, m);
  unlock(m);
}

main {
  thread_t t;
  create(t, Waiter);
}
"""

JOIN_CYCLE = """\
thread_t t1;
thread_t t2;

thread A() {
  join(t2);
}

thread B() {
  join(t1);
}

main {
  atomic {
    create(t1, A);
    create(t2, B);
  }
}
"""

COUNTER_LOOP = """\
int n;

thread Count(int k) {
  int c = 0;
  while (c < k)
    c = c + 1;
  n = c;
}

main {
  thread_t t;
  create(t, Count, 3);
  join(t);
  assert(n == 3);
}
"""


def benchmarks() -> dict[str, tuple[str, str]]:
    """name -> (source, expected verdict at a sufficient bound)."""
    out = {
        "running": (RUNNING_EXAMPLE, "VIOLATED"),
        "lock_order": (LOCK_ORDER, "VIOLATED"),
        "lock_safe": (LOCK_SAFE, "SAFE"),
        "signal_handshake": (SIGNAL_HANDSHAKE, "SAFE"),
        "double_unlock": (DOUBLE_UNLOCK, "VIOLATED"),
        "wait_no_signal": (WAIT_NO_SIGNAL, "VIOLATED"),
        "join_cycle": (JOIN_CYCLE, "VIOLATED"),
        "counter_loop": (COUNTER_LOOP, "SAFE"),
    }
    for n in (2, 3):
        out[f"phil{n}_sat"] = (philosophers(n, True), "VIOLATED")
        out[f"phil{n}_unsat"] = (philosophers(n, False), "SAFE")
    return out
