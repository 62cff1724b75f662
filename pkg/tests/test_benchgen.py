from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from mtbmc import oracle
from mtbmc.benchgen import FAMILIES, VARIANTS, BenchSpec, gen_bench, random_program
from mtbmc.frontend import load
from mtbmc.strategies import Verdict, VerifyConfig, verify


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("n", range(1, 9))
def test_generated_programs_typecheck(family, variant, n):
    if family == "lock-order" and n < 2 and variant != "unsat":
        with pytest.raises(ValueError):
            BenchSpec(family, n, variant)
        return
    text = gen_bench(BenchSpec(family, n, variant))
    typed = load(text)
    assert typed is not None
    assert gen_bench(BenchSpec(family, n, variant)) == text


def test_bad_specs():
    for args in (("towers", 2), ("philosophers", 0), ("philosophers", 2, "maybe")):
        with pytest.raises(ValueError):
            BenchSpec(*args)


@pytest.mark.parametrize("n", [2, 3])
def test_lock_order_ring(n):
    buggy = verify(load(gen_bench(BenchSpec("lock-order", n, "buggy"))), VerifyConfig(width=8))
    safe = verify(load(gen_bench(BenchSpec("lock-order", n, "unsat"))), VerifyConfig(width=8))
    assert (buggy.verdict, buggy.tag) == (Verdict.VIOLATED, "deadlock")
    assert safe.verdict is Verdict.SAFE


@pytest.mark.parametrize("n", [1, 2])
def test_signal_handshake(n):
    buggy = load(gen_bench(BenchSpec("signal-handshake", n, "buggy")))
    safe = load(gen_bench(BenchSpec("signal-handshake", n, "unsat")))
    assert verify(buggy, VerifyConfig(width=8)).tag == "deadlock"
    assert verify(safe, VerifyConfig(width=8)).verdict is Verdict.SAFE
    assert oracle.check(buggy, width=4).tags == {"deadlock"}


@given(st.integers(0, 1_000_000))
def test_random_programs_stay_in_the_small_family(seed):
    text = random_program(seed)
    assert text == random_program(seed)
    load(text)
    workers = text.count("thread W")
    assert 1 <= workers <= 2
    for body in text.split("thread W")[1:]:
        stmts = [ln for ln in body.split("}")[0].splitlines()[1:] if ln.strip() and not ln.strip().startswith(("if", "lock", "unlock"))]
        assert len(stmts) <= 4
    assert "/" not in text and "%" not in text
