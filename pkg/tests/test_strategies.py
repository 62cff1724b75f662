from __future__ import annotations

import pytest

from mtbmc import corpus, oracle
from mtbmc.frontend import load
from mtbmc.strategies import STRATEGIES, Verdict, VerifyConfig, verify

BENCH = corpus.benchmarks()


def run(src, **kw):
    kw.setdefault("width", 8)
    return verify(load(src), VerifyConfig(**kw))


def test_running_example_lazy():
    r = run(corpus.RUNNING_EXAMPLE)
    assert r.verdict is Verdict.VIOLATED
    assert (r.stats.interleavings, r.stats.failed_interleavings) == (2, 1)
    assert r.counterexample.replay_ok


def test_running_example_schedule_names_the_failing_order():
    r = run(corpus.RUNNING_EXAMPLE, strategy="schedule")
    assert r.verdict is Verdict.VIOLATED
    assert r.counterexample.ts == {"ts1": 2, "ts2": 1}
    assert r.counterexample.replay_ok


def test_running_example_uw_iterations():
    r = run(corpus.RUNNING_EXAMPLE, strategy="uw")
    assert r.verdict is Verdict.VIOLATED
    assert r.stats.iterations == 3
    assert r.counterexample.replay_ok


@pytest.mark.parametrize("n,expected", [(2, 2), (3, 6), (4, 24)])
def test_philosopher_interleavings(n, expected):
    r = run(corpus.philosophers(n, False))
    assert r.verdict is Verdict.SAFE
    assert r.stats.interleavings == expected
    assert r.stats.failed_interleavings == 0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_exhaustive_lazy_counts_every_failing_order(n):
    r = run(corpus.philosophers(n, True), exhaustive=True)
    assert r.verdict is Verdict.VIOLATED
    assert r.stats.failed_interleavings == r.stats.interleavings


@pytest.mark.parametrize("name", sorted(BENCH))
def test_strategies_agree_with_expected_verdicts(name):
    src, expected = BENCH[name]
    tags = set()
    for s in STRATEGIES:
        r = run(src, strategy=s, unwind=4)
        assert r.verdict.value == expected, s
        if r.verdict is Verdict.VIOLATED:
            assert r.counterexample is not None and r.counterexample.replay_ok, r.counterexample.replay_note
            assert r.counterexample.steps
            tags.add(r.tag)
    if expected == "VIOLATED":
        assert tags <= oracle.check(load(src), unwind=4, width=4).tags


@pytest.mark.parametrize("n,iters", [(2, 3), (3, 4), (4, 5)])
def test_uw_iterations_on_buggy_philosophers(n, iters):
    r = run(corpus.philosophers(n, True), strategy="uw")
    assert r.verdict is Verdict.VIOLATED and r.stats.iterations == iters


@pytest.mark.parametrize("n", [2, 3, 4])
def test_uw_iterations_bounded_by_literals(n):
    from mtbmc import encoder as E
    from mtbmc.cfg import prepare
    from mtbmc.symex import ExecContext, explore_all

    src = corpus.philosophers(n, False)
    ex = explore_all(ExecContext(prepare(load(src), 10), 8, True, False))
    lits = E.control_literals(ex.root, E.assign_blocks(ex.root))
    r = run(src, strategy="uw")
    assert r.verdict is Verdict.SAFE
    assert 1 <= r.stats.iterations <= len(lits.order) + 1


def test_core_cap_falls_back_to_relaxing_everything():
    src = corpus.philosophers(3, True)
    capped = run(src, strategy="uw", max_core=1)
    full = run(src, strategy="uw")
    assert capped.verdict is full.verdict is Verdict.VIOLATED
    assert capped.stats.core_fallbacks == 1 and full.stats.core_fallbacks == 0
    assert capped.stats.iterations == 2 < full.stats.iterations
    assert capped.counterexample.replay_ok


def test_conflict_limit_reports_resource_out():
    src = "int x;\nint y;\nmain {\n  x = nondet_int();\n  y = nondet_int();\n  assert(x * y != 1234567);\n}\n"
    r = run(src, width=32, conflict_limit=1)
    assert r.verdict is Verdict.RESOURCE_OUT
    assert run(src, width=32).verdict is Verdict.VIOLATED


def test_interleaving_cap_reports_resource_out():
    r = run(corpus.philosophers(4, False), strategy="schedule", max_interleavings=3)
    assert r.verdict is Verdict.RESOURCE_OUT


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_short_bound_is_reported(strategy):
    r = run(corpus.COUNTER_LOOP, strategy=strategy, unwind=1)
    assert r.verdict is Verdict.BOUND_INSUFFICIENT
    assert r.counterexample is not None and r.counterexample.violated.tag == "unwinding"
    off = run(corpus.COUNTER_LOOP, strategy=strategy, unwind=1, unwinding_assertions=False)
    assert off.verdict is Verdict.SAFE


def test_division_checks_flag_zero_divisors():
    src = "int x;\nmain {\n  int d = nondet_int();\n  x = 10 / d;\n}\n"
    assert run(src).verdict is Verdict.SAFE
    r = run(src, division_checks=True)
    assert r.verdict is Verdict.VIOLATED and r.tag == "division-by-zero"


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_dumps_are_written(tmp_path, strategy):
    run(corpus.RUNNING_EXAMPLE, strategy=strategy, dump_smtlib=tmp_path / "s", dump_cnf=tmp_path / "c", name="demo")
    smt = sorted((tmp_path / "s").iterdir())
    cnf = sorted((tmp_path / "c").iterdir())
    assert smt and len(smt) == len(cnf)
    assert smt[0].name == "demo-001.smt2"
    assert cnf[0].read_text().startswith("p cnf") or "p cnf" in cnf[0].read_text()


def test_config_validation():
    with pytest.raises(ValueError):
        VerifyConfig(strategy="eager")
    with pytest.raises(ValueError):
        VerifyConfig(unwind=0)
    with pytest.raises(ValueError):
        VerifyConfig(width=0)


def test_trace_lines_name_thread_and_location():
    r = run(corpus.RUNNING_EXAMPLE)
    lines = [s.format() for s in r.counterexample.steps]
    assert lines[0].startswith("#0 T0 ")
    assert any(":" in ln and " T1 " in ln for ln in lines)
    assert r.counterexample.violated.tag == "assertion"
