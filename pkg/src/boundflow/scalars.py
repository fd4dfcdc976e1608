"""Scalar domains: reference reals, round-on-R binary32, and outward intervals.

One graph evaluates under any of these (plus the bit-level kernel in
:mod:`boundflow.ieee32`); a domain object supplies the arithmetic.  The
reference domain is host binary64 standing in for exact reals, so "exact"
properties downstream always carry explicit tolerances.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from enum import Enum


class DomainError(ArithmeticError):
    """Raised when an operation leaves a domain's value set (e.g. finite-only overflow)."""


class RoundingMode(Enum):
    NEAREST_EVEN = "nearestEven"
    TOWARD_NEG_INF = "towardNegInf"
    TOWARD_POS_INF = "towardPosInf"


# Largest finite binary32 value and the nearest-mode overflow threshold
# (halfway between max-finite and 2**128, which rounds to infinity).
F32_MAX = (2.0 - 2.0 ** -23) * 2.0 ** 127
_F32_NEAREST_OVERFLOW = (2.0 - 2.0 ** -24) * 2.0 ** 127
F32_MIN_SUBNORMAL = 2.0 ** -149


def _f32_bits(x: float) -> int:
    return struct.unpack("<I", struct.pack("<f", x))[0]


def _f32_from_bits(u: int) -> float:
    return struct.unpack("<f", struct.pack("<I", u))[0]


def _round_nearest32(x: float) -> float:
    # struct's double->float conversion is IEEE round-to-nearest-even but
    # raises on overflow, so the infinity band is handled up front.
    if abs(x) >= _F32_NEAREST_OVERFLOW:
        return math.copysign(math.inf, x)
    return struct.unpack("<f", struct.pack("<f", x))[0]


def next_up32(v: float) -> float:
    """Smallest binary32 grid value strictly above v (v already on the grid)."""
    if math.isnan(v):
        return v
    if v == math.inf:
        return v
    if v == 0.0:
        return F32_MIN_SUBNORMAL
    u = _f32_bits(v)
    if u >> 31:  # negative: step magnitude down
        u -= 1
        if u == 0x8000_0000:
            return -0.0
        return _f32_from_bits(u)
    return _f32_from_bits(u + 1)


def next_down32(v: float) -> float:
    if math.isnan(v):
        return v
    if v == -math.inf:
        return v
    if v == 0.0:
        return -F32_MIN_SUBNORMAL
    u = _f32_bits(v)
    if u >> 31:
        return _f32_from_bits(u + 1)
    return _f32_from_bits(u - 1)


def fp32_round(x: float, mode: RoundingMode = RoundingMode.NEAREST_EVEN) -> float:
    """Round an extended real (binary64 carrier) onto the binary32 grid.

    Nearest ties to even; directed modes return the adjacent grid value on
    the correct side, with IEEE overflow behavior (directed modes saturate
    at max-finite on the inward side, infinity on the outward side).
    """
    if math.isnan(x):
        raise ValueError("fp32_round of NaN")
    if math.isinf(x):
        return x
    nearest = _round_nearest32(x)
    if mode is RoundingMode.NEAREST_EVEN:
        return nearest
    if mode is RoundingMode.TOWARD_POS_INF:
        return nearest if nearest >= x else next_up32(nearest)
    if mode is RoundingMode.TOWARD_NEG_INF:
        return nearest if nearest <= x else next_down32(nearest)
    raise ValueError(f"unknown rounding mode {mode}")


def is_on_f32_grid(x: float) -> bool:
    if math.isnan(x):
        return False
    if math.isinf(x):
        return True
    return _round_nearest32(x) == x and (abs(x) <= F32_MAX)


# --- Literal parsing / printing ---------------------------------------------

def parse_f32_literal(text: str) -> float:
    """Parse a decimal or 0x-hex bit-pattern literal to a binary32 grid value."""
    s = text.strip()
    if s.lower().startswith("0x") or s.lower().startswith("-0x"):
        neg = s.startswith("-")
        u = int(s[3:] if neg else s[2:], 16)
        if not 0 <= u <= 0xFFFF_FFFF:
            raise ValueError(f"hex literal out of 32-bit range: {text!r}")
        if neg:
            u ^= 0x8000_0000
        v = _f32_from_bits(u)
        if math.isnan(v):
            raise ValueError(f"NaN literal not accepted here: {text!r}")
        return v
    return fp32_round(float(s), RoundingMode.NEAREST_EVEN)


def format_f32_hex(x: float) -> str:
    """Bit-exact hex form of a grid value ("0x3F800000" style)."""
    return f"0x{_f32_bits(x):08X}"


def format_f32_decimal(x: float) -> str:
    """Shortest decimal that parses back to the same grid value."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    for precision in range(1, 18):
        s = f"{x:.{precision}g}"
        if fp32_round(float(s)) == x and math.copysign(1.0, float(s)) == math.copysign(1.0, x):
            return s
    return repr(x)


# --- Domains ------------------------------------------------------------------

class RealRef:
    """Host binary64 as the stand-in for exact real arithmetic."""

    name = "real"

    @staticmethod
    def from_float(x: float) -> float:
        return float(x)

    @staticmethod
    def from_decimal(text: str) -> float:
        return float(text)

    @staticmethod
    def to_float(x: float) -> float:
        return x

    zero = staticmethod(lambda: 0.0)
    one = staticmethod(lambda: 1.0)

    add = staticmethod(lambda a, b: a + b)
    sub = staticmethod(lambda a, b: a - b)
    mul = staticmethod(lambda a, b: a * b)

    @staticmethod
    def div(a: float, b: float) -> float:
        try:
            return a / b
        except ZeroDivisionError as exc:
            raise DomainError("division by zero in the reference domain") from exc

    neg = staticmethod(lambda a: -a)
    abs = staticmethod(lambda a: abs(a))
    min = staticmethod(min)
    max = staticmethod(max)
    lt = staticmethod(lambda a, b: a < b)
    le = staticmethod(lambda a, b: a <= b)

    exp = staticmethod(math.exp)
    tanh = staticmethod(math.tanh)

    @staticmethod
    def sigmoid(x: float) -> float:
        if x >= 0:
            return 1.0 / (1.0 + math.exp(-x))
        e = math.exp(x)
        return e / (1.0 + e)

    @staticmethod
    def sqrt(x: float) -> float:
        if x < 0:
            raise DomainError("sqrt of negative value in the reference domain")
        return math.sqrt(x)


class FP32Rounded:
    """Finite-only round-on-R binary32 model.

    Values are binary64 floats lying exactly on the binary32 grid; every
    operation computes in binary64 and rounds nearest-even.  Overflow and
    invalid operations are domain errors, never NaN/Inf values.

    The binary64 intermediate is wide enough (53 >= 2*24 + 2 digits) that
    the double rounding is innocuous for +,-,*,/,sqrt: results equal
    directly-rounded binary32 arithmetic bit for bit on the finite path.
    """

    name = "fp32"

    @staticmethod
    def from_float(x: float) -> float:
        if math.isnan(x) or math.isinf(x):
            raise DomainError("FP32Rounded holds finite values only")
        v = fp32_round(x)
        if math.isinf(v):
            raise DomainError("overflow while rounding to binary32")
        return v

    @classmethod
    def from_decimal(cls, text: str) -> float:
        return cls.from_float(float(text))

    @staticmethod
    def to_float(x: float) -> float:
        return x

    zero = staticmethod(lambda: 0.0)
    one = staticmethod(lambda: 1.0)

    @staticmethod
    def _round(x: float) -> float:
        v = _round_nearest32(x)
        if math.isinf(v) or math.isnan(v):
            raise DomainError("FP32Rounded overflow/invalid result")
        return v

    @classmethod
    def add(cls, a, b):
        return cls._round(a + b)

    @classmethod
    def sub(cls, a, b):
        return cls._round(a - b)

    @classmethod
    def mul(cls, a, b):
        return cls._round(a * b)

    @classmethod
    def div(cls, a, b):
        if b == 0.0:
            raise DomainError("FP32Rounded division by zero")
        return cls._round(a / b)

    neg = staticmethod(lambda a: -a)
    abs = staticmethod(lambda a: abs(a))
    min = staticmethod(min)
    max = staticmethod(max)
    lt = staticmethod(lambda a, b: a < b)
    le = staticmethod(lambda a, b: a <= b)

    # Transcendentals evaluate in binary64 and round back; a documented
    # trust boundary, not a correctly-rounded claim.
    @classmethod
    def exp(cls, x):
        try:
            return cls._round(math.exp(x))
        except OverflowError as exc:
            raise DomainError("FP32Rounded exp overflow") from exc

    @classmethod
    def tanh(cls, x):
        return cls._round(math.tanh(x))

    @classmethod
    def sigmoid(cls, x):
        return cls._round(RealRef.sigmoid(x))

    @classmethod
    def sqrt(cls, x):
        if x < 0:
            raise DomainError("FP32Rounded sqrt of negative value")
        return cls._round(math.sqrt(x))


@dataclass(frozen=True)
class RealInterval:
    """Closed binary64 interval, endpoints possibly infinite; lo <= hi."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoints must not be NaN")
        if self.lo > self.hi:
            raise ValueError(f"interval lo {self.lo} > hi {self.hi}")

    @staticmethod
    def point(x: float) -> "RealInterval":
        return RealInterval(x, x)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def width(self) -> float:
        return self.hi - self.lo


def _out_lo(x: float, steps: int = 1) -> float:
    for _ in range(steps):
        x = math.nextafter(x, -math.inf)
    return x


def _out_hi(x: float, steps: int = 1) -> float:
    for _ in range(steps):
        x = math.nextafter(x, math.inf)
    return x


class RealIntervalDomain:
    """Outward-rounded interval arithmetic over binary64 endpoints.

    Each binary64 endpoint operation is followed by one next-representable
    step outward, so enclosures stay sound w.r.t. exact real arithmetic at
    the cost of a sliver of tightness.  Library transcendentals get two
    steps to absorb sub-ulp libm error.
    """

    name = "interval"

    @staticmethod
    def from_float(x: float) -> RealInterval:
        return RealInterval.point(x)

    @staticmethod
    def from_decimal(text: str) -> RealInterval:
        v = float(text)
        return RealInterval(_out_lo(v), _out_hi(v))

    @staticmethod
    def to_float(x: RealInterval) -> float:
        return 0.5 * (x.lo + x.hi)

    zero = staticmethod(lambda: RealInterval(0.0, 0.0))
    one = staticmethod(lambda: RealInterval(1.0, 1.0))

    @staticmethod
    def add(a: RealInterval, b: RealInterval) -> RealInterval:
        return RealInterval(_out_lo(a.lo + b.lo), _out_hi(a.hi + b.hi))

    @staticmethod
    def sub(a: RealInterval, b: RealInterval) -> RealInterval:
        return RealInterval(_out_lo(a.lo - b.hi), _out_hi(a.hi - b.lo))

    @staticmethod
    def mul(a: RealInterval, b: RealInterval) -> RealInterval:
        products = []
        for x in (a.lo, a.hi):
            for y in (b.lo, b.hi):
                p = x * y
                if math.isnan(p):  # 0 * inf corner: resolves to 0 in exact arithmetic of the corner scan
                    p = 0.0
                products.append(p)
        return RealInterval(_out_lo(min(products)), _out_hi(max(products)))

    @staticmethod
    def div(a: RealInterval, b: RealInterval) -> RealInterval:
        if b.lo <= 0.0 <= b.hi:
            return RealInterval(-math.inf, math.inf)
        quotients = [x / y for x in (a.lo, a.hi) for y in (b.lo, b.hi)]
        return RealInterval(_out_lo(min(quotients)), _out_hi(max(quotients)))

    @staticmethod
    def neg(a: RealInterval) -> RealInterval:
        return RealInterval(-a.hi, -a.lo)

    @staticmethod
    def abs(a: RealInterval) -> RealInterval:
        if a.lo >= 0:
            return a
        if a.hi <= 0:
            return RealInterval(-a.hi, -a.lo)
        return RealInterval(0.0, max(-a.lo, a.hi))

    @staticmethod
    def min(a: RealInterval, b: RealInterval) -> RealInterval:
        return RealInterval(min(a.lo, b.lo), min(a.hi, b.hi))

    @staticmethod
    def max(a: RealInterval, b: RealInterval) -> RealInterval:
        return RealInterval(max(a.lo, b.lo), max(a.hi, b.hi))

    @staticmethod
    def lt(a: RealInterval, b: RealInterval) -> bool:
        # Certain comparison: true only when every point of a is below every point of b.
        return a.hi < b.lo

    @staticmethod
    def le(a: RealInterval, b: RealInterval) -> bool:
        return a.hi <= b.lo

    @staticmethod
    def _monotone(f, a: RealInterval, steps: int = 2) -> RealInterval:
        return RealInterval(_out_lo(f(a.lo), steps), _out_hi(f(a.hi), steps))

    @classmethod
    def exp(cls, a: RealInterval) -> RealInterval:
        def safe_exp(x: float) -> float:
            if x == math.inf:
                return math.inf
            if x == -math.inf:
                return 0.0
            try:
                return math.exp(x)
            except OverflowError:
                return math.inf
        lo = max(0.0, _out_lo(safe_exp(a.lo), 2))
        return RealInterval(lo, _out_hi(safe_exp(a.hi), 2))

    @classmethod
    def tanh(cls, a: RealInterval) -> RealInterval:
        r = cls._monotone(math.tanh, a)
        return RealInterval(max(-1.0, r.lo), min(1.0, r.hi))

    @classmethod
    def sigmoid(cls, a: RealInterval) -> RealInterval:
        r = cls._monotone(RealRef.sigmoid, a)
        return RealInterval(max(0.0, r.lo), min(1.0, r.hi))

    @classmethod
    def sqrt(cls, a: RealInterval) -> RealInterval:
        if a.hi < 0:
            raise DomainError("sqrt of a strictly negative interval")
        lo = max(0.0, _out_lo(math.sqrt(max(a.lo, 0.0))))
        return RealInterval(lo, _out_hi(math.sqrt(a.hi)))


_BINARY_OPS = ("add", "sub", "mul", "div", "min", "max")
_UNARY_OPS = ("neg", "abs", "exp", "tanh", "sigmoid", "sqrt")


def domain_eval(domain, op: str, *operands):
    """Dispatch one scalar operation by name on any domain object."""
    if op in _BINARY_OPS:
        if len(operands) != 2:
            raise ValueError(f"{op} expects 2 operands")
        return getattr(domain, op)(*operands)
    if op in _UNARY_OPS:
        if len(operands) != 1:
            raise ValueError(f"{op} expects 1 operand")
        return getattr(domain, op)(operands[0])
    raise ValueError(f"unknown scalar op {op!r}")
