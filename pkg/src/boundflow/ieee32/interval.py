"""Directed-rounded binary32 endpoint intervals.

Endpoints are kernel bit patterns, never NaN.  Lower endpoints round
toward -inf, upper endpoints toward +inf, so every interval result
encloses the nearest-even pointwise results over its inputs.  Any
operation that could produce NaN somewhere on the box widens to
[-inf, +inf] instead of failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..scalars import RoundingMode
from . import (
    NEG_INF,
    POS_INF,
    POS_ZERO,
    b32_add,
    b32_div,
    b32_max,
    b32_min,
    b32_mul,
    b32_sqrt,
    b32_sub,
    b32_transcendental,
    from_real,
    is_nan,
    next_down_b32,
    next_up_b32,
    to_real,
)

_DOWN = RoundingMode.TOWARD_NEG_INF
_UP = RoundingMode.TOWARD_POS_INF

FULL_LO = NEG_INF
FULL_HI = POS_INF


def _key(u: int) -> int:
    # total order with -0 < +0 (only for validation / min-max selection)
    mag = u & 0x7FFFFFFF
    return -mag - 1 if (u >> 31) else mag


@dataclass(frozen=True)
class B32Interval:
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if is_nan(self.lo) or is_nan(self.hi):
            raise ValueError("interval endpoints must not be NaN")
        if _key(self.lo) > _key(self.hi):
            raise ValueError(
                f"interval lo {self.lo:#010x} above hi {self.hi:#010x} in the total order"
            )

    @staticmethod
    def point(u: int) -> "B32Interval":
        return B32Interval(u, u)

    @staticmethod
    def from_floats(lo: float, hi: float) -> "B32Interval":
        return B32Interval(from_real(lo, _DOWN), from_real(hi, _UP))

    @staticmethod
    def full() -> "B32Interval":
        return B32Interval(FULL_LO, FULL_HI)

    def contains(self, u: int) -> bool:
        """Membership by value (signed zeros compare equal)."""
        if is_nan(u):
            return False
        return to_real(self.lo) <= to_real(u) <= to_real(self.hi)

    def contains_zero(self) -> bool:
        return to_real(self.lo) <= 0.0 <= to_real(self.hi)

    def to_reals(self) -> tuple[float, float]:
        return to_real(self.lo), to_real(self.hi)


_FULL = B32Interval(FULL_LO, FULL_HI)


def iv_add(a: B32Interval, b: B32Interval) -> B32Interval:
    lo = b32_add(a.lo, b.lo, _DOWN)
    hi = b32_add(a.hi, b.hi, _UP)
    if is_nan(lo) or is_nan(hi):  # opposite infinities inside the box
        return _FULL
    return B32Interval(lo, hi)


def iv_sub(a: B32Interval, b: B32Interval) -> B32Interval:
    lo = b32_sub(a.lo, b.hi, _DOWN)
    hi = b32_sub(a.hi, b.lo, _UP)
    if is_nan(lo) or is_nan(hi):
        return _FULL
    return B32Interval(lo, hi)


def iv_neg(a: B32Interval) -> B32Interval:
    return B32Interval(a.hi ^ 0x80000000, a.lo ^ 0x80000000)


def iv_mul(a: B32Interval, b: B32Interval) -> B32Interval:
    los = []
    his = []
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            lo = b32_mul(x, y, _DOWN)
            hi = b32_mul(x, y, _UP)
            if is_nan(lo) or is_nan(hi):  # 0 * inf reachable on the box
                return _FULL
            los.append(lo)
            his.append(hi)
    return B32Interval(min(los, key=_key), max(his, key=_key))


def iv_div(a: B32Interval, b: B32Interval) -> B32Interval:
    if b.contains_zero():  # includes signed-zero endpoints
        return _FULL
    los = []
    his = []
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            lo = b32_div(x, y, _DOWN)
            hi = b32_div(x, y, _UP)
            if is_nan(lo) or is_nan(hi):  # inf/inf reachable
                return _FULL
            los.append(lo)
            his.append(hi)
    return B32Interval(min(los, key=_key), max(his, key=_key))


def iv_sqrt(a: B32Interval) -> B32Interval:
    if to_real(a.lo) < 0.0:  # strictly negative points would yield NaN
        return _FULL
    return B32Interval(b32_sqrt(a.lo, _DOWN), b32_sqrt(a.hi, _UP))


def iv_abs(a: B32Interval) -> B32Interval:
    ra, rb = to_real(a.lo), to_real(a.hi)
    if ra >= 0.0:
        return a
    if rb <= 0.0:
        return iv_neg(a)
    m = max(a.lo ^ 0x80000000, a.hi, key=_key)
    return B32Interval(POS_ZERO, m)


def iv_min(a: B32Interval, b: B32Interval) -> B32Interval:
    return B32Interval(b32_min(a.lo, b.lo), b32_min(a.hi, b.hi))


def iv_max(a: B32Interval, b: B32Interval) -> B32Interval:
    return B32Interval(b32_max(a.lo, b.lo), b32_max(a.hi, b.hi))


def _iv_monotone_trans(f: str, a: B32Interval, clamp_lo: int | None,
                       clamp_hi: int | None) -> B32Interval:
    # One extra grid step outward absorbs sub-ulp libm non-monotonicity;
    # the enclosure is w.r.t. the kernel's own transcendental policy.
    lo = next_down_b32(b32_transcendental(f, a.lo))
    hi = next_up_b32(b32_transcendental(f, a.hi))
    if clamp_lo is not None and _key(lo) < _key(clamp_lo):
        lo = clamp_lo
    if clamp_hi is not None and _key(hi) > _key(clamp_hi):
        hi = clamp_hi
    return B32Interval(lo, hi)


def iv_exp(a: B32Interval) -> B32Interval:
    return _iv_monotone_trans("exp", a, POS_ZERO, None)


def iv_tanh(a: B32Interval) -> B32Interval:
    return _iv_monotone_trans("tanh", a, from_real(-1.0), from_real(1.0))


def iv_sigmoid(a: B32Interval) -> B32Interval:
    return _iv_monotone_trans("sigmoid", a, POS_ZERO, from_real(1.0))


def iv_op(op: str, a: B32Interval, b: B32Interval | None = None) -> B32Interval:
    table_bin = {"add": iv_add, "sub": iv_sub, "mul": iv_mul, "div": iv_div,
                 "min": iv_min, "max": iv_max}
    table_un = {"neg": iv_neg, "abs": iv_abs, "sqrt": iv_sqrt, "exp": iv_exp,
                "tanh": iv_tanh, "sigmoid": iv_sigmoid}
    if op in table_bin:
        if b is None:
            raise ValueError(f"{op} needs two intervals")
        return table_bin[op](a, b)
    if op in table_un:
        return table_un[op](a)
    raise ValueError(f"unknown interval op {op!r}")
