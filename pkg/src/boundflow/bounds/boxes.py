"""Per-node boxes and the two interval backings.

A box entry is a lower/upper pair of TensorValues whose scalars belong to
the active backing: binary64 floats (fast, for testing against reference
semantics) or binary32 bit patterns with directed endpoint rounding (for
bit-level float-semantics claims).  Transfer rules in ibp.py are written
once against the small scalar surface below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..scalars import RoundingMode
from ..shapes import Shape, TensorValue
from .. import ieee32
from ..ieee32 import interval as b32iv


@dataclass(frozen=True)
class BoxEntry:
    lower: TensorValue
    upper: TensorValue

    def __post_init__(self) -> None:
        if self.lower.shape != self.upper.shape:
            raise ValueError("box lower/upper shapes differ")

    @property
    def shape(self) -> Shape:
        return self.lower.shape

    @staticmethod
    def point(t: TensorValue) -> "BoxEntry":
        return BoxEntry(t, t)


class RealBacking:
    """Plain binary64 endpoint arithmetic; enclosure up to fp64 rounding."""

    name = "real"

    inf = math.inf

    @staticmethod
    def neg_inf():
        return -math.inf

    @staticmethod
    def pos_inf():
        return math.inf

    zero = staticmethod(lambda: 0.0)

    @staticmethod
    def from_param(v):
        return v

    @staticmethod
    def to_float(v):
        return v

    add_lo = staticmethod(lambda a, b: a + b)
    add_hi = staticmethod(lambda a, b: a + b)
    sub_lo = staticmethod(lambda a, b: a - b)
    sub_hi = staticmethod(lambda a, b: a - b)
    mul_lo = staticmethod(lambda a, b: a * b)
    mul_hi = staticmethod(lambda a, b: a * b)

    @staticmethod
    def div_lo(a, b):
        return a / b

    @staticmethod
    def div_hi(a, b):
        return a / b

    le = staticmethod(lambda a, b: a <= b)
    lt = staticmethod(lambda a, b: a < b)
    min = staticmethod(min)
    max = staticmethod(max)
    neg = staticmethod(lambda a: -a)

    is_neg = staticmethod(lambda w: w < 0)

    @staticmethod
    def exp_lo(x):
        if x == -math.inf:
            return 0.0
        try:
            return math.exp(x)
        except OverflowError:
            return math.inf

    exp_hi = exp_lo

    @staticmethod
    def tanh_lo(x):
        return math.tanh(x)

    tanh_hi = tanh_lo

    @staticmethod
    def sigmoid_lo(x):
        from ..scalars import RealRef

        return RealRef.sigmoid(x)

    sigmoid_hi = sigmoid_lo


class B32Backing:
    """Directed-rounded binary32 endpoints via the bit-level kernel."""

    name = "b32"

    _DOWN = RoundingMode.TOWARD_NEG_INF
    _UP = RoundingMode.TOWARD_POS_INF

    @staticmethod
    def neg_inf():
        return ieee32.NEG_INF

    @staticmethod
    def pos_inf():
        return ieee32.POS_INF

    zero = staticmethod(lambda: ieee32.POS_ZERO)

    @staticmethod
    def from_param(v):
        return v  # parameters already live on the binary32 grid

    to_float = staticmethod(ieee32.to_real)

    @classmethod
    def add_lo(cls, a, b):
        r = ieee32.b32_add(a, b, cls._DOWN)
        return ieee32.NEG_INF if ieee32.is_nan(r) else r

    @classmethod
    def add_hi(cls, a, b):
        r = ieee32.b32_add(a, b, cls._UP)
        return ieee32.POS_INF if ieee32.is_nan(r) else r

    @classmethod
    def sub_lo(cls, a, b):
        r = ieee32.b32_sub(a, b, cls._DOWN)
        return ieee32.NEG_INF if ieee32.is_nan(r) else r

    @classmethod
    def sub_hi(cls, a, b):
        r = ieee32.b32_sub(a, b, cls._UP)
        return ieee32.POS_INF if ieee32.is_nan(r) else r

    @classmethod
    def mul_lo(cls, a, b):
        r = ieee32.b32_mul(a, b, cls._DOWN)
        return ieee32.NEG_INF if ieee32.is_nan(r) else r

    @classmethod
    def mul_hi(cls, a, b):
        r = ieee32.b32_mul(a, b, cls._UP)
        return ieee32.POS_INF if ieee32.is_nan(r) else r

    @classmethod
    def div_lo(cls, a, b):
        r = ieee32.b32_div(a, b, cls._DOWN)
        return ieee32.NEG_INF if ieee32.is_nan(r) else r

    @classmethod
    def div_hi(cls, a, b):
        r = ieee32.b32_div(a, b, cls._UP)
        return ieee32.POS_INF if ieee32.is_nan(r) else r

    @staticmethod
    def le(a, b):
        return ieee32.to_real(a) <= ieee32.to_real(b)

    @staticmethod
    def lt(a, b):
        return ieee32.to_real(a) < ieee32.to_real(b)

    min = staticmethod(ieee32.b32_min)
    max = staticmethod(ieee32.b32_max)
    neg = staticmethod(ieee32.b32_neg)

    @staticmethod
    def is_neg(w):
        return bool(w >> 31) and not ieee32.is_zero(w)

    # Transcendental endpoints reuse the widened interval rules so enclosure
    # holds w.r.t. the kernel's own policy.
    @staticmethod
    def exp_lo(x):
        return b32iv.iv_exp(b32iv.B32Interval.point(x)).lo

    @staticmethod
    def exp_hi(x):
        return b32iv.iv_exp(b32iv.B32Interval.point(x)).hi

    @staticmethod
    def tanh_lo(x):
        return b32iv.iv_tanh(b32iv.B32Interval.point(x)).lo

    @staticmethod
    def tanh_hi(x):
        return b32iv.iv_tanh(b32iv.B32Interval.point(x)).hi

    @staticmethod
    def sigmoid_lo(x):
        return b32iv.iv_sigmoid(b32iv.B32Interval.point(x)).lo

    @staticmethod
    def sigmoid_hi(x):
        return b32iv.iv_sigmoid(b32iv.B32Interval.point(x)).hi


REAL_BACKING = RealBacking()
B32_BACKING = B32Backing()

BACKINGS = {"real": REAL_BACKING, "b32": B32_BACKING}


def box_to_floats(entry: BoxEntry, backing) -> tuple[list[float], list[float]]:
    lo = [backing.to_float(x) for x in entry.lower.data]
    hi = [backing.to_float(x) for x in entry.upper.data]
    return lo, hi


def box_contains(entry: BoxEntry, value: TensorValue, backing, tol: float = 0.0) -> bool:
    """Componentwise membership of a point tensor (by numeric value)."""
    for lo, hi, v in zip(entry.lower.data, entry.upper.data, value.data):
        flo, fhi, fv = backing.to_float(lo), backing.to_float(hi), backing.to_float(v)
        if not (flo - tol <= fv <= fhi + tol):
            return False
    return True
