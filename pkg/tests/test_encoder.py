from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from mtbmc import benchgen, corpus
from mtbmc import encoder as E
from mtbmc import terms as T
from mtbmc.cfg import prepare
from mtbmc.frontend import load
from mtbmc.solver import Solver
from mtbmc.symex import ExecContext, explore_all

z3 = pytest.importorskip("z3")


def explore(src: str, k: int = 2, width: int = 8, por: bool = True):
    cfg = prepare(load(src), k)
    return explore_all(ExecContext(cfg, width, por, False))


def internal(f: E.Formula, assume=None):
    enc = E.bitblast(f)
    names = list(f.selectors) if assume is None else list(assume)
    res = Solver(enc.cnf).solve(enc.assumptions(names))
    return res, enc


def z3_run(script: str) -> list[str]:
    ctx = z3.Context()
    out = z3.Z3_eval_smtlib2_string(ctx.ref(), script)
    return out.split()


def z3_status(f: E.Formula, assume=None) -> str:
    return z3_run(E.to_smtlib(f, assume))[0]


def z3_core(f: E.Formula) -> set[str]:
    words = z3_run(E.to_smtlib(f) + "(get-unsat-core)\n")
    assert words[0] == "unsat"
    return {w.strip("()|") for w in words[1:]} - {""}


SMALL = {name: src for name, (src, _) in corpus.benchmarks().items() if not name.startswith("phil3")}


@pytest.mark.parametrize("name", sorted(SMALL))
def test_schedule_formula_agrees_with_z3(name):
    ex = explore(SMALL[name])
    full = E.encode_schedule(ex.root, ex.leaves)
    for f in (E.real_goals(full), E.unwinding_goals(full)):
        res, _ = internal(f)
        assert z3_status(f) == res.status.value


@pytest.mark.parametrize("name", ["running", "lock_order", "phil2_sat", "counter_loop"])
def test_lazy_formulas_agree_with_z3(name):
    ex = explore(SMALL[name])
    for leaf in ex.leaves:
        f = E.real_goals(E.encode_lazy(leaf))
        res, _ = internal(f)
        assert z3_status(f) == res.status.value


@pytest.mark.parametrize("name", ["running", "lock_safe", "phil2_unsat", "phil2_sat", "signal_handshake"])
def test_selector_cores_agree_with_z3(name):
    ex = explore(SMALL[name])
    blocks = E.assign_blocks(ex.root)
    full = E.encode_schedule(ex.root, ex.leaves, blocks=blocks)
    lits = E.control_literals(ex.root, blocks)
    f = E.encode_uw(E.real_goals(full), lits)
    res, enc = internal(f)
    assert z3_status(f) == res.status.value
    if res.unsat:
        ours = set(enc.names_of(res.core or []))
        theirs = z3_core(f)
        assert ours <= set(f.selectors) and theirs <= set(f.selectors) | {f"sel_{n}" for n in f.selectors}
        # both cores are cores on their own
        assert internal(f, sorted(ours))[0].unsat
        assert z3_status(f, sorted(ours)) == "unsat"


def test_no_goals_is_unsat_in_both_routes():
    f = E.Formula()
    assert internal(f)[0].unsat
    assert z3_status(f) == "unsat"
    assert E.bitblast(f).trivially_unsat or internal(f)[0].unsat


def test_schedule_domains_running_example():
    ex = explore(corpus.RUNNING_EXAMPLE)
    sched = E.assign_blocks(ex.root).schedule
    tids = {leaf.record.tid for leaf in ex.leaves for leaf in leaf.path()}
    assert sched.domains, "two workers need at least one selection variable"
    for b, dom in sched.domains.items():
        assert b >= 1 and dom == sorted(set(dom)) and set(dom) <= tids
        assert max(dom) < 1 << sched.width
    assert 0 not in sched.domains


def test_single_thread_schedule_equals_lazy():
    src = "int x;\nmain {\n  int i = 0;\n  while (i < 3) {\n    x = x + nondet_int();\n    i = i + 1;\n  }\n  assert(x != 5);\n}\n"
    ex = explore(src, k=3)
    assert len(ex.leaves) == 1
    sched = E.encode_schedule(ex.root, ex.leaves)
    lazy = E.encode_lazy(ex.leaves[0])
    assert not sched.schedule.domains
    assert len(sched.goals) == len(lazy.goals)
    for f, g in ((E.real_goals(sched), E.real_goals(lazy)), (E.unwinding_goals(sched), E.unwinding_goals(lazy))):
        assert internal(f)[0].status == internal(g)[0].status


def test_control_literals_are_ordered_by_guard_size():
    ex = explore(corpus.philosophers(3, False))
    blocks = E.assign_blocks(ex.root)
    lits = E.control_literals(ex.root, blocks)
    sizes = [len(g.args) if g.op == "and" else 1 for g in (lits.guards[n] for n in lits.order)]
    assert sizes == sorted(sizes)
    assert len({id(lits.guards[n]) for n in lits.order}) == len(lits.order)
    assert all(not lits.guards[n].is_true() for n in lits.order)


def test_relax_removes_only_named_literals():
    ex = explore(corpus.RUNNING_EXAMPLE)
    lits = E.control_literals(ex.root, E.assign_blocks(ex.root))
    first = lits.order[0]
    lits.relax([first, "nope"])
    assert lits.active == lits.order[1:]


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_schedule_formula_is_the_disjunction_of_paths(seed):
    ex = explore(benchgen.random_program(seed), k=2, width=4)
    sched_sat = internal(E.real_goals(E.encode_schedule(ex.root, ex.leaves)))[0].sat
    lazy_sat = any(internal(E.real_goals(E.encode_lazy(leaf)))[0].sat for leaf in ex.leaves)
    assert sched_sat == lazy_sat


def test_smtlib_declares_schedule_variables():
    ex = explore(corpus.RUNNING_EXAMPLE)
    text = E.to_smtlib(E.real_goals(E.encode_schedule(ex.root, ex.leaves)))
    assert "(declare-fun |ts1| () (_ BitVec" in text
    assert text.rstrip().endswith("(check-sat)")
    assert T.BOOL is not None
