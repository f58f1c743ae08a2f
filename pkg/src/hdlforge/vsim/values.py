"""Four-state bit-vector values and their operators.

A value is (v, x, w): bit i is X when x has bit i set, otherwise it equals
bit i of v; v and x never overlap. Z is folded into X on read, which is
sound for the supported subset (no tristate drivers).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Val:
    v: int
    x: int
    w: int

    def __post_init__(self) -> None:
        assert self.w >= 1
        assert self.v & self.x == 0, "value and x-mask must not overlap"

    @property
    def is_fully_known(self) -> bool:
        return self.x == 0

    def bit(self, i: int) -> str:
        if i >= self.w or i < 0:
            return "x"
        if (self.x >> i) & 1:
            return "x"
        return "1" if (self.v >> i) & 1 else "0"

    def to_bin(self) -> str:
        return "".join(self.bit(i) for i in range(self.w - 1, -1, -1))


def make(value: int, width: int, xmask: int = 0) -> Val:
    mask = (1 << width) - 1
    xm = xmask & mask
    return Val(value & mask & ~xm, xm, width)


def all_x(width: int) -> Val:
    mask = (1 << width) - 1
    return Val(0, mask, width)


def resize(a: Val, width: int) -> Val:
    """Truncate or zero-extend to `width` (x bits stay x where kept)."""
    if a.w == width:
        return a
    mask = (1 << width) - 1
    return Val(a.v & mask & ~(a.x & mask), a.x & mask, width)


def _common(a: Val, b: Val) -> tuple[Val, Val, int]:
    w = max(a.w, b.w)
    return resize(a, w), resize(b, w), w


def bit_not(a: Val) -> Val:
    mask = (1 << a.w) - 1
    return Val(~a.v & mask & ~a.x, a.x, a.w)


def bit_and(a: Val, b: Val) -> Val:
    a, b, w = _common(a, b)
    def0 = (~a.v & ~a.x) | (~b.v & ~b.x)
    def1 = a.v & b.v
    mask = (1 << w) - 1
    value = def1 & mask
    xmask = ~(def1 | def0) & mask
    return Val(value & ~xmask, xmask, w)


def bit_or(a: Val, b: Val) -> Val:
    a, b, w = _common(a, b)
    def1 = a.v | b.v
    def0 = (~a.v & ~a.x) & (~b.v & ~b.x)
    mask = (1 << w) - 1
    value = def1 & mask
    xmask = ~(def1 | def0) & mask
    return Val(value & ~xmask, xmask, w)


def bit_xor(a: Val, b: Val) -> Val:
    a, b, w = _common(a, b)
    mask = (1 << w) - 1
    xmask = (a.x | b.x) & mask
    return Val((a.v ^ b.v) & mask & ~xmask, xmask, w)


TRUE = Val(1, 0, 1)
FALSE = Val(0, 0, 1)
XBIT = Val(0, 1, 1)


def truthiness(a: Val) -> str:
    """'1' definitely true, '0' definitely false, 'x' unknown."""
    if a.v:
        return "1"
    return "x" if a.x else "0"


def logical_not(a: Val) -> Val:
    t = truthiness(a)
    return {"1": FALSE, "0": TRUE, "x": XBIT}[t]


def logical_and(a: Val, b: Val) -> Val:
    ta, tb = truthiness(a), truthiness(b)
    if ta == "0" or tb == "0":
        return FALSE
    if ta == "1" and tb == "1":
        return TRUE
    return XBIT


def logical_or(a: Val, b: Val) -> Val:
    ta, tb = truthiness(a), truthiness(b)
    if ta == "1" or tb == "1":
        return TRUE
    if ta == "0" and tb == "0":
        return FALSE
    return XBIT


def eq(a: Val, b: Val) -> Val:
    a, b, _ = _common(a, b)
    if a.x or b.x:
        return XBIT
    return TRUE if a.v == b.v else FALSE


def neq(a: Val, b: Val) -> Val:
    r = eq(a, b)
    return r if r is XBIT else (FALSE if r is TRUE else TRUE)


def case_eq(a: Val, b: Val) -> Val:
    a, b, _ = _common(a, b)
    return TRUE if (a.v == b.v and a.x == b.x) else FALSE


def case_neq(a: Val, b: Val) -> Val:
    return logical_not(case_eq(a, b))


def add(a: Val, b: Val) -> Val:
    a, b, w = _common(a, b)
    if a.x or b.x:
        return all_x(w)
    return make(a.v + b.v, w)


def sub(a: Val, b: Val) -> Val:
    a, b, w = _common(a, b)
    if a.x or b.x:
        return all_x(w)
    return make(a.v - b.v, w)


def compare(op: str, a: Val, b: Val) -> Val:
    a, b, _ = _common(a, b)
    if a.x or b.x:
        return XBIT
    table = {
        "<": a.v < b.v,
        "<=": a.v <= b.v,
        ">": a.v > b.v,
        ">=": a.v >= b.v,
    }
    return TRUE if table[op] else FALSE


def shift(op: str, a: Val, b: Val) -> Val:
    if b.x:
        return all_x(a.w)
    amount = b.v
    if op in ("<<", "<<<"):
        return make(a.v << amount, a.w, a.x << amount)
    return Val((a.v >> amount), (a.x >> amount), a.w)


def ternary(cond: Val, a: Val, b: Val) -> Val:
    t = truthiness(cond)
    if t == "1":
        return a
    if t == "0":
        return b
    a, b, w = _common(a, b)
    # Unknown select: keep bits the branches agree on, x elsewhere.
    agree = ~(a.v ^ b.v) & ~a.x & ~b.x
    mask = (1 << w) - 1
    xmask = ~agree & mask
    return Val(a.v & agree & mask, xmask, w)


def negate(a: Val) -> Val:
    if a.x:
        return all_x(a.w)
    return make(-a.v, a.w)
