from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtbmc import benchgen, corpus
from mtbmc.cfg import NodeKind, prepare
from mtbmc.frontend import load
from mtbmc.por import Access, AccessClass, RwSets, classify_pair, rw_independent, visible
from mtbmc.strategies import VerifyConfig, verify
from mtbmc.symex import ExecContext, explore_all


def node_by_text(pc, func, text):
    g = pc.threads[func]
    return next(n for n in g.nodes.values() if n.text == text)


def test_visibility_examples():
    pc = prepare(load(corpus.RUNNING_EXAMPLE), 2)
    assert visible(node_by_text(pc, "Ty", "x = 3;"))
    assert visible(node_by_text(pc, "Tx", "assert(((i >= 0) && (i < 10)));"))
    local = prepare(load("thread T() { int l = 0; l = l + 1; }\nmain { }"), 1)
    assert not visible(node_by_text(local, "T", "l = (l + 1);"))


def test_whole_array_granularity():
    pc = prepare(load("int a[4];\nthread T() { a[0] = 1; a[1] = 2; }\nmain { }"), 1)
    n0 = node_by_text(pc, "T", "a[0] = 1;")
    n1 = node_by_text(pc, "T", "a[1] = 2;")
    assert classify_pair(n0, n1) is AccessClass.NON_EQUIVALENT


R = lambda *v: Access(reads=frozenset(v))
W = lambda *v: Access(writes=frozenset(v))


@pytest.mark.parametrize(
    "a,b,expected",
    [
        (R("x"), R("x"), AccessClass.EQUIVALENT),
        (R("x"), W("x"), AccessClass.NON_EQUIVALENT),
        (W("x"), W("x"), AccessClass.NON_EQUIVALENT),
        (W("x"), W("y"), AccessClass.EQUIVALENT),
        (R("x"), W("y"), AccessClass.EQUIVALENT),
    ],
)
def test_access_table(a, b, expected):
    assert classify_pair(a, b) is expected


names = st.frozensets(st.sampled_from(["x", "y", "z"]), max_size=3)
accesses = st.builds(Access, names, names)


@given(accesses, accesses)
def test_classification_is_symmetric(a, b):
    assert classify_pair(a, b) is classify_pair(b, a)


@given(st.dictionaries(st.integers(0, 3), accesses, min_size=1))
def test_independence_matches_the_set_condition(rw):
    for j in rw:
        others = [k for k in rw if k != j]
        touched = set().union(*[rw[k].reads | rw[k].writes for k in others]) if others else set()
        written = set().union(*[rw[k].writes for k in others]) if others else set()
        expected = not (rw[j].writes & touched) and not (rw[j].reads & written)
        assert rw_independent(j, list(rw), rw) == expected


def test_independence_examples():
    pc = prepare(load(corpus.philosophers(3, False)), 2)
    rw = RwSets(pc)
    phil = rw.body("Phil")
    assert not rw_independent(1, [1, 2], {1: phil, 2: phil})
    assert rw_independent(1, [1, 2], {1: Access(), 2: phil})
    assert rw_independent(1, [1, 2], {1: W("x"), 2: W("y")})


def test_suffix_sets_shrink_along_the_thread():
    pc = prepare(load(corpus.LOCK_ORDER), 2)
    rw = RwSets(pc)
    order = pc.threads["A"].order
    sets = [rw.suffix("A", p) for p in range(len(order) + 1)]
    for a, b in zip(sets, sets[1:]):
        assert b.reads <= a.reads and b.writes <= a.writes
    assert sets[-1] == Access()


def leaves(src, por, k=3, width=8):
    ctx = ExecContext(prepare(load(src), k), width, por)
    return len(explore_all(ctx).leaves)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_philosophers_interleavings_are_factorial(n):
    assert leaves(corpus.philosophers(n, False), True) == math.factorial(n)


@pytest.mark.parametrize("name", sorted(corpus.benchmarks()))
def test_pruning_never_adds_interleavings(name):
    src = corpus.benchmarks()[name][0]
    assert leaves(src, True) <= leaves(src, False)


@pytest.mark.parametrize("name", sorted(corpus.benchmarks()))
@pytest.mark.parametrize("strategy", ["lazy", "schedule", "uw"])
def test_reduction_keeps_verdicts_on_corpus(name, strategy):
    typed = load(corpus.benchmarks()[name][0])
    on = verify(typed, VerifyConfig(strategy=strategy, por=True, width=8, unwind=4))
    off = verify(typed, VerifyConfig(strategy=strategy, por=False, width=8, unwind=4))
    assert on.verdict is off.verdict


@given(st.integers(0, 5000))
def test_reduction_keeps_verdicts_on_generated_programs(seed):
    typed = load(benchgen.random_program(seed))
    on = verify(typed, VerifyConfig(strategy="schedule", por=True, width=4, unwind=2))
    off = verify(typed, VerifyConfig(strategy="schedule", por=False, width=4, unwind=2))
    assert on.verdict is off.verdict
    assert on.stats.interleavings <= off.stats.interleavings
