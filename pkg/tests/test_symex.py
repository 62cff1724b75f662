from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtbmc import benchgen, corpus
from mtbmc import encoder as E
from mtbmc import terms as T
from mtbmc.cfg import prepare
from mtbmc.frontend import load
from mtbmc.solver import solve
from mtbmc.symex import (
    ExecContext,
    ScheduleError,
    ThreadStatus,
    enabled,
    execute_interleaving,
    explore_all,
    initial_state,
)


def ctx_for(src: str, k: int = 3, width: int = 32, por: bool = True) -> ExecContext:
    return ExecContext(prepare(load(src), k), width, por)


def run_defs(steps, env=None):
    """Evaluate every SSA definition of ``steps`` in order."""
    env = dict(env or {})
    for rec in steps:
        for d in rec.defs:
            env[d.sym] = T.evaluate(d.term, env, lambda t: False if t.sort == T.BOOL else 0)
    return env


def value(store, key, env):
    return T.evaluate(store[key], env, lambda t: 0)


LOCKS = """\
mutex m;
int x;

thread A() {
  lock(m);
  x = 1;
  unlock(m);
}

thread B() {
  lock(m);
  x = 2;
  unlock(m);
}

main {
  thread_t a;
  thread_t b;
  create(a, A);
  create(b, B);
}
"""


def test_running_example_only_ty_is_enabled_after_creation():
    ctx = ctx_for(corpus.RUNNING_EXAMPLE)
    trace = execute_interleaving(ctx, [0])
    assert enabled(ctx, trace.state) == {2}


def test_terminated_single_thread_has_nothing_enabled():
    ctx = ctx_for("int x;\nmain { x = 1; }")
    trace = execute_interleaving(ctx, [0])
    assert enabled(ctx, trace.state) == set()


def test_only_the_lock_holder_is_enabled():
    ctx = ctx_for(LOCKS)
    trace = execute_interleaving(ctx, [0, 1, 2])
    assert trace.state.threads[2].status is ThreadStatus.LOCK_WAIT
    assert enabled(ctx, trace.state) == {1}


def test_step_on_y1_defines_x_as_three():
    ctx = ctx_for(corpus.RUNNING_EXAMPLE)
    trace = execute_interleaving(ctx, [0, 2])
    y1 = trace.steps[-1]
    assert [e.text for e in y1.execs] == ["x = 3;"]
    (d,) = [d for d in y1.defs if d.sym.startswith("x#")]
    assert d.term.is_const and d.term.value == 3
    assert trace.state.store["x"] is d.term


def test_running_example_interleaving_has_the_assert_obligation():
    ctx = ctx_for(corpus.RUNNING_EXAMPLE)
    trace = execute_interleaving(ctx, [0, 2, 1, 1])
    texts = [e.text for s in trace.steps[1:] for e in s.execs]
    assert texts == ["x = 3;", "a[i] = arg;", "assert(((i >= 0) && (i < 10)));"]
    (ob,) = trace.obligations
    assert ob.tag == "assertion" and ob.tid == 1
    f = E.encode_trace(trace)
    assert solve(E.bitblast(f).cnf).sat


def test_schedule_picking_a_missing_thread_fails():
    ctx = ctx_for(corpus.RUNNING_EXAMPLE)
    with pytest.raises(ScheduleError):
        execute_interleaving(ctx, [1])


def test_empty_program_gives_an_empty_trace():
    ctx = ctx_for("main { }")
    trace = execute_interleaving(ctx, [0])
    assert [e for s in trace.steps for e in s.execs] == []
    assert trace.obligations == []
    assert not solve(E.bitblast(E.encode_trace(trace)).cnf).sat


def test_symbolic_index_write_matches_concrete_execution():
    src = "int a[4];\nint i;\nmain {\n  i = nondet_int();\n  a[i] = 7;\n}\n"
    ctx = ctx_for(src, width=4)
    trace = execute_interleaving(ctx, [0, 0])
    (nd,) = trace.steps[0].execs[0].nondets
    for c in range(-8, 8):
        env = run_defs(trace.steps, {nd.name: c})
        for j in range(4):
            expected = 7 if j == c else 0
            assert value(trace.state.store, f"a[{j}]", env) == expected


def test_read_read_orders_are_equisatisfiable():
    src = """\
int x;
int r1;
int r2;

thread A() { assert(x == 0); }
thread B() { assert(x == 0 || r1 == 1); }

main {
  thread_t a;
  thread_t b;
  x = nondet_int();
  create(a, A);
  create(b, B);
}
"""
    ctx = ctx_for(src, width=4)
    one = execute_interleaving(ctx, [0, 1, 2])
    two = execute_interleaving(ctx, [0, 2, 1])
    sat = [solve(E.bitblast(E.encode_trace(t)).cnf).sat for t in (one, two)]
    assert sat[0] == sat[1] is True


def _paths(src, por=True, k=2):
    ctx = ctx_for(src, k=k, width=4, por=por)
    return ctx, explore_all(ctx).leaves


@given(st.integers(0, 3000), st.booleans())
def test_single_assignment_on_every_path(seed, por):
    ctx, leaves = _paths(benchgen.random_program(seed), por)
    for leaf in leaves:
        syms = [d.sym for n in leaf.path() for d in n.record.defs]
        assert len(syms) == len(set(syms))


@given(st.integers(0, 3000), st.booleans())
def test_program_order_and_whole_statements(seed, por):
    ctx, leaves = _paths(benchgen.random_program(seed), por)
    for leaf in leaves:
        seen: dict[int, list[int]] = {}
        for n in leaf.path():
            for ex in n.record.execs:
                seen.setdefault(ex.tid, []).append(ex.node)
        for tid, nodes in seen.items():
            func = "main" if tid == 0 else None
            if func is None:
                continue
            order = ctx.cfg.threads[func].order
            pos = [order.index(x) for x in nodes]
            assert pos == sorted(pos) and len(set(pos)) == len(pos)


@given(st.integers(0, 3000))
def test_steps_hold_at_most_one_visible_statement_outside_atomic(seed):
    ctx, leaves = _paths(benchgen.random_program(seed), True)
    for leaf in leaves:
        for n in leaf.path():
            cfgs = ctx.cfg.threads
            vis = 0
            for ex in n.record.execs:
                for g in cfgs.values():
                    node = g.nodes.get(ex.node)
                    if node is not None and node.text == ex.text:
                        vis += node.visible
                        break
            assert vis <= 2  # a lock attempt and its retry may share a step


def test_initial_state_counts_main_as_running():
    ctx = ctx_for(corpus.RUNNING_EXAMPLE)
    st0 = initial_state(ctx)
    assert [t.func for t in st0.threads] == ["main"]
    assert st0.store["__trds_in_run"].value == 1
