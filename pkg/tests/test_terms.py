from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtbmc import terms as T
from mtbmc.bitblast import BitBlaster
from mtbmc.solver import Status, solve

W = 4
MASK = (1 << W) - 1


def signed(u: int) -> int:
    u &= MASK
    return u - (1 << W) if u >> (W - 1) else u


# Reference definitions written from the SMT-LIB bit-vector theory on unsigned
# values; signed division is defined there through unsigned division.
def udiv(s, t):
    return MASK if t == 0 else s // t


def urem(s, t):
    return s if t == 0 else s % t


def ref_sdiv(s, t):
    ms, mt = s >> (W - 1), t >> (W - 1)
    neg = lambda x: (-x) & MASK
    if not ms and not mt:
        return udiv(s, t)
    if ms and not mt:
        return neg(udiv(neg(s), t))
    if not ms and mt:
        return neg(udiv(s, neg(t)))
    return udiv(neg(s), neg(t))


def ref_srem(s, t):
    ms, mt = s >> (W - 1), t >> (W - 1)
    neg = lambda x: (-x) & MASK
    if not ms and not mt:
        return urem(s, t)
    if ms and not mt:
        return neg(urem(neg(s), t))
    if not ms and mt:
        return urem(s, neg(t))
    return neg(urem(neg(s), neg(t)))


def ref_ashr(s, t):
    if t >= W:
        return MASK if s >> (W - 1) else 0
    return (signed(s) >> t) & MASK


REF = {
    "bvadd": lambda s, t: (s + t) & MASK,
    "bvsub": lambda s, t: (s - t) & MASK,
    "bvmul": lambda s, t: (s * t) & MASK,
    "bvsdiv": ref_sdiv,
    "bvsrem": ref_srem,
    "bvand": lambda s, t: s & t,
    "bvor": lambda s, t: s | t,
    "bvxor": lambda s, t: s ^ t,
    "bvshl": lambda s, t: 0 if t >= W else (s << t) & MASK,
    "bvashr": ref_ashr,
}


@pytest.mark.parametrize("op", sorted(REF))
def test_constant_folding_matches_reference(op):
    for s, t in itertools.product(range(1 << W), repeat=2):
        got = T.BvBin(op, T.BvConst(signed(s), W), T.BvConst(signed(t), W))
        assert got.is_const
        assert got.value == signed(REF[op](s, t)), (op, s, t)


@pytest.mark.parametrize("op", sorted(REF))
def test_bitblasted_operator_is_exhaustively_correct(op):
    a, b, r = T.Var("a", W), T.Var("b", W), T.Var("r", W)
    bb = BitBlaster()
    bb.assert_term(T.Eq(r, T.BvBin(op, a, b)))
    bits_a, bits_b = bb.var_bits["a"], bb.var_bits["b"]
    for s, t in itertools.product(range(1 << W), repeat=2):
        assume = [lit if (s >> i) & 1 else -lit for i, lit in enumerate(bits_a)]
        assume += [lit if (t >> i) & 1 else -lit for i, lit in enumerate(bits_b)]
        res = solve(bb.cnf, assume)
        assert res.status is Status.SAT
        assert bb.value_of("r", res.model, W) == signed(REF[op](s, t)), (op, s, t)


@pytest.mark.parametrize("cmp,ref", [(T.Slt, lambda x, y: x < y), (T.Sle, lambda x, y: x <= y), (T.Eq, lambda x, y: x == y)])
def test_comparisons_are_exhaustively_correct(cmp, ref):
    a, b = T.Var("a", W), T.Var("b", W)
    p = T.Var("p", T.BOOL)
    bb = BitBlaster()
    bb.assert_term(T.Eq(p, cmp(a, b)))
    for s, t in itertools.product(range(1 << W), repeat=2):
        assume = [lit if (s >> i) & 1 else -lit for i, lit in enumerate(bb.var_bits["a"])]
        assume += [lit if (t >> i) & 1 else -lit for i, lit in enumerate(bb.var_bits["b"])]
        res = solve(bb.cnf, assume)
        assert bb.value_of("p", res.model, T.BOOL) == ref(signed(s), signed(t))


def test_hash_consing_shares_structure():
    a = T.Var("a", W)
    assert T.Add(a, T.BvConst(1, W)) is T.Add(a, T.BvConst(1, W))
    assert T.And(T.TRUE, T.Var("p", T.BOOL)) is T.Var("p", T.BOOL)
    assert T.Or(T.Var("p", T.BOOL), T.TRUE) is T.TRUE


def test_sort_errors():
    with pytest.raises(TypeError):
        T.BvBin("bvadd", T.Var("a", 4), T.Var("b", 8))


# random term generator over two variables at width 4
_VARS = [T.Var("u", W), T.Var("v", W)]


@st.composite
def bv_terms(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        if draw(st.booleans()):
            return draw(st.sampled_from(_VARS))
        return T.BvConst(draw(st.integers(-8, 7)), W)
    kind = draw(st.sampled_from(["bin", "un", "ite"]))
    if kind == "bin":
        return T.BvBin(draw(st.sampled_from(sorted(REF))), draw(bv_terms(depth - 1)), draw(bv_terms(depth - 1)))
    if kind == "un":
        return T.BvUn(draw(st.sampled_from(["bvneg", "bvnot"])), draw(bv_terms(depth - 1)))
    c = T.Slt(draw(bv_terms(depth - 1)), draw(bv_terms(depth - 1)))
    return T.Ite(c, draw(bv_terms(depth - 1)), draw(bv_terms(depth - 1)))


@given(bv_terms(), st.integers(-8, 7), st.integers(-8, 7))
def test_blasting_agrees_with_evaluation(t, u, v):
    env = {"u": u, "v": v}
    expected = T.evaluate(t, env)
    bb = BitBlaster()
    r = T.Var("result", W)
    bb.assert_term(T.Eq(r, t))
    bb.assert_term(T.Eq(_VARS[0], T.BvConst(u, W)))
    bb.assert_term(T.Eq(_VARS[1], T.BvConst(v, W)))
    res = solve(bb.cnf)
    assert res.status is Status.SAT
    assert bb.value_of("result", res.model, W) == expected


@given(bv_terms(), st.integers(-8, 7), st.integers(-8, 7))
def test_substitution_then_folding_matches_evaluation(t, u, v):
    folded = T.substitute(t, {_VARS[0]: T.BvConst(u, W), _VARS[1]: T.BvConst(v, W)})
    assert folded.is_const
    assert folded.value == T.evaluate(t, {"u": u, "v": v})
