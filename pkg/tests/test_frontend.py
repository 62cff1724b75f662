from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtbmc import benchgen, corpus
from mtbmc.frontend import MtcSyntaxError, MtcTypeError, ast as A, load, parse, pretty, typecheck


def test_running_example_shape():
    prog = parse(corpus.RUNNING_EXAMPLE, "running.mtc")
    assert [t.name for t in prog.threads] == ["Tx", "Ty"]
    assert [g.name for g in prog.globals] == ["a", "i", "j", "x"]
    typed = typecheck(prog)
    assert set(typed.threads) == {"Tx", "Ty"}
    assert typed.global_init == {"j": 1, "x": 2}
    assert typed.globals["a"].kind == "array" and typed.globals["a"].length == 10


def test_empty_program():
    prog = parse("main { }")
    assert prog.threads == [] and prog.main.stmts == []


def test_syntax_error_points_at_the_semicolon():
    with pytest.raises(MtcSyntaxError) as err:
        parse("main { x = ; }")
    assert err.value.loc.line == 1 and err.value.loc.col == 12


@pytest.mark.parametrize(
    "src,kind",
    [
        ("main { assert(1); }", "mismatch"),
        ("int x;\nmain { lock(x); }", "intrinsic"),
        ("main { y = 1; }", "undeclared"),
        ("bool b;\nmain { b = 3; }", "mismatch"),
        ("int x;\nint x;\nmain { }", "declaration"),
        ("thread T(int a) { }\nmain { thread_t h; create(h, T); }", "intrinsic"),
    ],
)
def test_type_errors(src, kind):
    with pytest.raises(MtcTypeError) as err:
        load(src)
    assert err.value.kind == kind
    assert err.value.loc.line >= 1


def test_errors_carry_a_location_in_the_message():
    with pytest.raises(MtcTypeError) as err:
        load("main {\n  assert(1);\n}", "t.mtc")
    assert str(err.value).startswith("t.mtc:2:")


def _assert_fixed_point(src: str) -> None:
    first = parse(src)
    text = pretty(first)
    second = parse(text)
    assert first == second
    assert pretty(second) == text


@pytest.mark.parametrize("name", sorted(corpus.benchmarks()))
def test_round_trip_on_corpus(name):
    _assert_fixed_point(corpus.benchmarks()[name][0])


@given(st.integers(0, 10_000))
def test_round_trip_on_generated_programs(seed):
    _assert_fixed_point(benchgen.random_program(seed))


# expression text generator covering every operator and precedence level
_BIN = ["+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>"]
_CMP = ["==", "!=", "<", "<=", ">", ">="]


def int_exprs():
    leaf = st.one_of(st.integers(0, 20).map(str), st.sampled_from(["x", "y", "a[1]", "a[x]"]))
    return st.recursive(
        leaf,
        lambda inner: st.one_of(
            st.tuples(inner, st.sampled_from(_BIN), inner).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            st.tuples(inner, st.sampled_from(_BIN), inner).map(lambda t: f"{t[0]} {t[1]} {t[2]}"),
            inner.map(lambda e: f"-{e}"),
            inner.map(lambda e: f"~({e})"),
        ),
        max_leaves=6,
    )


def bool_exprs():
    atom = st.tuples(int_exprs(), st.sampled_from(_CMP), int_exprs()).map(lambda t: f"({t[0]}) {t[1]} ({t[2]})")
    return st.recursive(
        st.one_of(atom, st.sampled_from(["true", "false", "b"])),
        lambda inner: st.one_of(
            st.tuples(inner, st.sampled_from(["&&", "||"]), inner).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            inner.map(lambda e: f"!({e})"),
        ),
        max_leaves=4,
    )


@given(int_exprs(), bool_exprs())
def test_round_trip_on_expressions(e, c):
    src = f"int x;\nint y;\nbool b;\nint a[4];\nmain {{\n  x = {e};\n  if ({c}) y = 1; else y = 2;\n  while ({c}) x = x - 1;\n}}\n"
    _assert_fixed_point(src)
    load(src)  # the generated text is always well typed


def test_every_node_has_a_location():
    prog = parse(corpus.SIGNAL_HANDSHAKE, "s.mtc")

    def walk(node):
        if isinstance(node, (A.Stmt, A.Expr)):
            assert node.loc.line >= 1
        if hasattr(node, "__dataclass_fields__"):
            for f in node.__dataclass_fields__:
                v = getattr(node, f)
                for x in v if isinstance(v, list) else [v]:
                    if isinstance(x, (A.Stmt, A.Expr)):
                        walk(x)

    for t in prog.threads:
        walk(t.body)
    walk(prog.main)
