"""Concrete two's-complement semantics for fixed-width signed integers.

Every value is kept as a Python ``int`` already wrapped into the signed range
``[-2**(w-1), 2**(w-1) - 1]``.  Constant folding, the term evaluator and the
explicit-state oracle all go through these helpers so that they agree with the
bit-level encoding bit for bit.
"""

from __future__ import annotations


def wrap(value: int, width: int) -> int:
    """Reduce ``value`` modulo ``2**width`` into the signed range."""
    mask = (1 << width) - 1
    value &= mask
    if value >> (width - 1):
        value -= 1 << width
    return value


def to_unsigned(value: int, width: int) -> int:
    return value & ((1 << width) - 1)


def min_int(width: int) -> int:
    return -(1 << (width - 1))


def max_int(width: int) -> int:
    return (1 << (width - 1)) - 1


def add(a: int, b: int, width: int) -> int:
    return wrap(a + b, width)


def sub(a: int, b: int, width: int) -> int:
    return wrap(a - b, width)


def mul(a: int, b: int, width: int) -> int:
    return wrap(a * b, width)


def neg(a: int, width: int) -> int:
    return wrap(-a, width)


def sdiv(a: int, b: int, width: int) -> int:
    """C99 truncating division.  ``b == 0`` is the caller's problem."""
    if b == 0:
        raise ZeroDivisionError("sdiv by zero has no defined value")
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return wrap(q, width)


def srem(a: int, b: int, width: int) -> int:
    """C99 remainder: sign follows the dividend."""
    if b == 0:
        raise ZeroDivisionError("srem by zero has no defined value")
    r = abs(a) % abs(b)
    if a < 0:
        r = -r
    return wrap(r, width)


def bvnot(a: int, width: int) -> int:
    return wrap(~a, width)


def bvand(a: int, b: int, width: int) -> int:
    return wrap(a & b, width)


def bvor(a: int, b: int, width: int) -> int:
    return wrap(a | b, width)


def bvxor(a: int, b: int, width: int) -> int:
    return wrap(a ^ b, width)


def shl(a: int, b: int, width: int) -> int:
    # shift amount is read as unsigned; anything >= width clears the value
    amount = to_unsigned(b, width)
    if amount >= width:
        return 0
    return wrap(a << amount, width)


def ashr(a: int, b: int, width: int) -> int:
    amount = to_unsigned(b, width)
    if amount >= width:
        return -1 if a < 0 else 0
    return wrap(a >> amount, width)


BINARY = {
    "bvadd": add,
    "bvsub": sub,
    "bvmul": mul,
    "bvsdiv": sdiv,
    "bvsrem": srem,
    "bvand": bvand,
    "bvor": bvor,
    "bvxor": bvxor,
    "bvshl": shl,
    "bvashr": ashr,
}

UNARY = {
    "bvneg": neg,
    "bvnot": bvnot,
}
