from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtbmc import benchgen, corpus, oracle
from mtbmc.cfg import NodeKind, build_cfg, prepare, unroll
from mtbmc.frontend import ast as A, load
from mtbmc.strategies import VerifyConfig, verify


def kinds(cfg):
    return [cfg.nodes[n].kind for n in cfg.order]


def has_assign_expr(e) -> bool:
    if isinstance(e, A.AssignExpr):
        return True
    if isinstance(e, A.Binary):
        return has_assign_expr(e.left) or has_assign_expr(e.right)
    if isinstance(e, A.Unary):
        return has_assign_expr(e.operand)
    if isinstance(e, A.Index):
        return has_assign_expr(e.index)
    return False


def test_running_example_thread_shape():
    pc = prepare(load(corpus.RUNNING_EXAMPLE), 2)
    tx = pc.threads["Tx"]
    assert kinds(tx) == [NodeKind.TEST, NodeKind.ASSIGN, NodeKind.ASSERT, NodeKind.EXIT]
    test = tx.nodes[tx.order[0]]
    assert test.text.startswith("x > 2") or "x > 2" in test.text
    # the test guards both statements on its true edge
    assert sorted(pol for _, pol in test.succs) == [False, True]


def test_straight_line_thread_is_linear():
    pc = prepare(load("int x;\nthread T() { x = 1; x = 2; x = 3; }\nmain { }"), 3)
    t = pc.threads["T"]
    assert kinds(t) == [NodeKind.ASSIGN] * 3 + [NodeKind.EXIT]
    for a, b in zip(t.order, t.order[1:]):
        assert t.nodes[a].succs == [(b, None)]


def test_tests_are_made_pure():
    src = "int x;\nint y;\nmain {\n  if ((x = nondet_int()) > 2) y = 1;\n}\n"
    pc = prepare(load(src), 2)
    main = pc.threads["main"]
    tests = [main.nodes[n] for n in main.order if main.nodes[n].kind is NodeKind.TEST]
    assert tests and not any(has_assign_expr(t.expr) for t in tests)
    first = main.nodes[main.order[0]]
    assert first.kind is NodeKind.ASSIGN  # the hoisted assignment comes first


@pytest.mark.parametrize("prop,expected", [("y == 0 || x > 2", "SAFE"), ("y == 1", "VIOLATED")])
def test_hoisted_test_behaves_like_the_manual_rewrite(prop, expected):
    nested = f"int x;\nint y;\nmain {{\n  if ((x = nondet_int()) > 2) y = 1;\n  assert({prop});\n}}\n"
    manual = f"int x;\nint y;\nmain {{\n  x = nondet_int();\n  if (x > 2) y = 1;\n  assert({prop});\n}}\n"
    cfg = VerifyConfig(width=4, unwind=1)
    assert verify(load(nested), cfg).verdict.value == expected
    assert verify(load(manual), cfg).verdict.value == expected


def test_loop_free_graph_is_unchanged_by_unrolling():
    raw = build_cfg(load(corpus.RUNNING_EXAMPLE))
    for k in (1, 3):
        un = unroll(raw.threads["Tx"], k)
        assert sorted(n.kind.value for n in un.nodes.values()) == sorted(n.kind.value for n in raw.threads["Tx"].nodes.values())


def test_unrolled_loop_structure():
    src = "int i;\nmain {\n  while (i < 2) i = i + 1;\n}\n"
    main = prepare(load(src), 2).threads["main"]
    ks = kinds(main)
    assert ks.count(NodeKind.ASSIGN) == 2
    assert ks.count(NodeKind.TEST) == 3
    ua = [main.nodes[n] for n in main.order if main.nodes[n].kind is NodeKind.ASSERT]
    assert len(ua) == 1 and ua[0].tag == "unwinding"
    no_ua = prepare(load(src), 2, unwinding_assertions=False).threads["main"]
    assert NodeKind.ASSERT not in kinds(no_ua)


def test_insufficient_bound_is_reported():
    src = "int i;\nmain {\n  while (i < 5) i = i + 1;\n}\n"
    assert verify(load(src), VerifyConfig(unwind=2, width=8)).verdict.value == "BOUND-INSUFFICIENT"
    assert oracle.check(load(src), unwind=2, width=8).verdict == "BOUND-INSUFFICIENT"
    assert verify(load(src), VerifyConfig(unwind=5, width=8)).verdict.value == "SAFE"


def _graphs(pc):
    return pc.threads.values()


@given(st.integers(0, 5000), st.integers(1, 4))
def test_unrolled_graphs_are_dags(seed, k):
    src = benchgen.random_program(seed)
    # wrap one worker statement into a loop to exercise unrolling
    src = src.replace("thread W0(int p) {", "thread W0(int p) {\n  while (x < p) x = x + 1;", 1)
    pc = prepare(load(src), k)
    for g in _graphs(pc):
        assert g.is_acyclic()
        assert sorted(g.order) == sorted(g.nodes)
        pos = {n: i for i, n in enumerate(g.order)}
        for n, node in g.nodes.items():
            for succ, _ in node.succs:
                assert pos[succ] > pos[n]
            if node.kind is NodeKind.TEST:
                assert len(node.succs) == 2


@given(st.integers(0, 5000), st.integers(1, 4))
def test_every_node_reachable_from_entry(seed, k):
    pc = prepare(load(benchgen.random_program(seed)), k)
    for g in _graphs(pc):
        seen, stack = set(), [g.entry]
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            stack.extend(s for s, _ in g.nodes[n].succs)
        assert seen == set(g.nodes)


@pytest.mark.parametrize("name", ["counter_loop", "signal_handshake", "lock_safe"])
def test_sufficient_bound_is_stable(name):
    src = corpus.benchmarks()[name][0]
    typed = load(src)
    k = 4
    a = verify(typed, VerifyConfig(unwind=k, width=4)).verdict.value
    b = verify(typed, VerifyConfig(unwind=k + 1, width=4)).verdict.value
    assert a == b == oracle.check(typed, unwind=k, width=4).verdict
