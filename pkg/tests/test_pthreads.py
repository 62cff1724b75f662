from __future__ import annotations

import pytest

from mtbmc import benchgen, corpus, oracle
from mtbmc import terms as T
from mtbmc.frontend import load
from mtbmc.pthreads import BLOCKED, BROADCAST_ID, TRDS, VerificationError, ThreadStatus
from mtbmc.strategies import VerifyConfig, verify
from mtbmc.symex import execute_interleaving, explore_all

from test_symex import LOCKS, ctx_for


def defs_of(steps, key):
    return [d.term for s in steps for d in s.defs if d.sym.rsplit("#", 1)[0] == key]


def test_running_example_counts_three_threads():
    ctx = ctx_for(corpus.RUNNING_EXAMPLE)
    trace = execute_interleaving(ctx, [0])
    values = [t.value for t in defs_of(trace.steps, TRDS)]
    assert max(values) == 3
    assert trace.state.store[TRDS].value == 2  # main has exited


def test_join_after_exit_does_not_block():
    src = "int x;\nthread W() { x = 1; }\nmain {\n  thread_t t;\n  create(t, W);\n  join(t);\n  assert(x == 1);\n}\n"
    ctx = ctx_for(src)
    trace = execute_interleaving(ctx, [0, 1, 0])
    assert trace.state.threads[1].status is ThreadStatus.EXITED
    assert trace.state.threads[0].status is not ThreadStatus.JOIN_WAIT
    assert verify(load(src), VerifyConfig(width=8)).verdict.value == "SAFE"


def test_join_cycle_is_a_deadlock():
    typed = load(corpus.JOIN_CYCLE)
    r = verify(typed, VerifyConfig(width=8))
    assert r.verdict.value == "VIOLATED" and r.tag == "deadlock"
    assert oracle.check(typed, width=4).tags == {"deadlock"}


def test_join_on_unknown_handle_is_rejected():
    src = "main {\n  thread_t t;\n  join(t);\n}\n"
    with pytest.raises(VerificationError):
        verify(load(src), VerifyConfig())


def test_single_lock_sets_the_bit_without_obligations():
    src = "mutex m;\nmain {\n  lock(m);\n}\n"
    ctx = ctx_for(src)
    trace = execute_interleaving(ctx, [0])
    assert trace.state.store["m.lock"].value == 1
    assert all(o.term.is_false() for o in trace.obligations)


def test_critical_sections_never_overlap():
    ctx = ctx_for(LOCKS)
    for leaf in explore_all(ctx).leaves:
        seq = [(n.tid, e.text) for n in leaf.path() for e in n.record.execs if e.text in ("x = 1;", "x = 2;", "unlock(m);")]
        assert seq in (
            [(1, "x = 1;"), (1, "unlock(m);"), (2, "x = 2;"), (2, "unlock(m);")],
            [(2, "x = 2;"), (2, "unlock(m);"), (1, "x = 1;"), (1, "unlock(m);")],
        )


def test_unlock_after_lock_is_fine_and_double_unlock_is_not():
    ok = load("mutex m;\nmain {\n  lock(m);\n  unlock(m);\n}\n")
    assert verify(ok, VerifyConfig()).verdict.value == "SAFE"
    r = verify(load(corpus.DOUBLE_UNLOCK), VerifyConfig())
    assert (r.verdict.value, r.tag) == ("VIOLATED", "bad-unlock")


def test_unlock_by_another_thread_passes():
    src = """\
mutex m;
int done;

thread U() {
  unlock(m);
}

main {
  thread_t t;
  lock(m);
  create(t, U);
  join(t);
}
"""
    typed = load(src)
    assert verify(typed, VerifyConfig(width=8)).verdict.value == "SAFE"
    assert oracle.check(typed, width=4).verdict == "SAFE"


def test_wait_without_the_mutex_is_reported():
    src = "mutex m;\ncond c;\nmain {\n  wait(c, m);\n}\n"
    r = verify(load(src), VerifyConfig())
    assert r.verdict.value == "VIOLATED" and r.tag == "bad-wait"


def test_handshake_and_missing_signal():
    assert verify(load(corpus.SIGNAL_HANDSHAKE), VerifyConfig(width=8)).verdict.value == "SAFE"
    r = verify(load(corpus.WAIT_NO_SIGNAL), VerifyConfig(width=8))
    assert (r.verdict.value, r.tag) == ("VIOLATED", "deadlock")


def test_broadcast_without_waiters_only_bumps_the_counter():
    src = "cond c;\nint x;\nmain {\n  x = 1;\n  broadcast(c);\n}\n"
    ctx = ctx_for(src)
    trace = execute_interleaving(ctx, [0, 0])
    assert trace.state.store[BROADCAST_ID].value == 1
    assert trace.state.store[BLOCKED].value == 0
    assert trace.state.store["c.nwaiters"].value == 0


SYNC = {
    "lock_order": corpus.LOCK_ORDER,
    "lock_safe": corpus.LOCK_SAFE,
    "signal_handshake": corpus.SIGNAL_HANDSHAKE,
    "wait_no_signal": corpus.WAIT_NO_SIGNAL,
    "join_cycle": corpus.JOIN_CYCLE,
    "double_unlock": corpus.DOUBLE_UNLOCK,
    "ring3_buggy": benchgen.lock_order(3, True),
    "ring3_safe": benchgen.lock_order(3, False),
    "hand2_buggy": benchgen.signal_handshake(2, True),
    "hand2_safe": benchgen.signal_handshake(2, False),
}


@pytest.mark.parametrize("name", sorted(SYNC))
def test_deadlock_detection_matches_the_oracle(name):
    typed = load(SYNC[name])
    ref = oracle.check(typed, unwind=3, width=4)
    for strategy in ("lazy", "schedule", "uw"):
        r = verify(typed, VerifyConfig(strategy=strategy, unwind=3, width=4))
        assert r.verdict.value == ref.verdict
        if r.tag is not None:
            assert r.tag in ref.tags


@pytest.mark.parametrize("name", ["lock_safe", "signal_handshake", "ring3_safe", "hand2_safe"])
def test_model_counters_stay_in_range_on_feasible_paths(name):
    ctx = ctx_for(SYNC[name], width=8)
    for leaf in explore_all(ctx).leaves:
        env: dict = {}
        for n in leaf.path():
            for d in n.record.defs:
                env[d.sym] = T.evaluate(d.term, env, lambda t: False if t.sort == T.BOOL else 0)
                base = d.sym.rsplit("#", 1)[0]
                v = env[d.sym]
                if base.endswith(".lock"):
                    assert v in (0, 1)
                if base in (TRDS, BLOCKED) or base.endswith((".count", ".nwaiters")):
                    assert v >= 0
