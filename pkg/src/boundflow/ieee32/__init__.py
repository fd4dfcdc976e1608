"""Bit-level IEEE-754 binary32 execution.

Patterns are plain ints (32-bit).  The arithmetic kernel has two
interchangeable backends: a compiled Cython extension for speed and a
pure-Python fallback, selected at import (set BOUNDFLOW_PURE_KERNEL=1 to
force the fallback).  ``benchmarks/bench_kernel.py`` compares the two.

Core arithmetic is self-contained integer significand arithmetic.  exp,
tanh and sigmoid delegate to binary64 libm and round back to binary32: a
deterministic policy and a documented trust boundary, not a
correctly-rounded claim.
"""

from __future__ import annotations

import math
import os

from ..scalars import DomainError, RoundingMode

from . import _kernel_py

if os.environ.get("BOUNDFLOW_PURE_KERNEL") == "1":
    _kernel = _kernel_py
    KERNEL_BACKEND = "pure-python (forced)"
else:
    try:
        from . import _kernel_c as _kernel  # type: ignore[no-redef]

        KERNEL_BACKEND = "compiled"
    except ImportError:
        _kernel = _kernel_py
        KERNEL_BACKEND = "pure-python"

# Canonical patterns
POS_ZERO = 0x00000000
NEG_ZERO = 0x80000000
POS_INF = 0x7F800000
NEG_INF = 0xFF800000
QNAN = 0x7FC00000
ONE = 0x3F800000
MAX_FINITE = 0x7F7FFFFF

_MODE_TO_INT = {
    RoundingMode.NEAREST_EVEN: 0,
    RoundingMode.TOWARD_NEG_INF: 1,
    RoundingMode.TOWARD_POS_INF: 2,
}


def _m(mode: RoundingMode) -> int:
    return _MODE_TO_INT[mode]


is_nan = _kernel.is_nan
is_inf = _kernel.is_inf
is_zero = _kernel.is_zero
is_finite = _kernel.is_finite


def b32_add(a: int, b: int, mode: RoundingMode = RoundingMode.NEAREST_EVEN) -> int:
    return _kernel.b32_add(a, b, _m(mode))


def b32_sub(a: int, b: int, mode: RoundingMode = RoundingMode.NEAREST_EVEN) -> int:
    return _kernel.b32_sub(a, b, _m(mode))


def b32_mul(a: int, b: int, mode: RoundingMode = RoundingMode.NEAREST_EVEN) -> int:
    return _kernel.b32_mul(a, b, _m(mode))


def b32_div(a: int, b: int, mode: RoundingMode = RoundingMode.NEAREST_EVEN) -> int:
    return _kernel.b32_div(a, b, _m(mode))


def b32_sqrt(a: int, mode: RoundingMode = RoundingMode.NEAREST_EVEN) -> int:
    return _kernel.b32_sqrt(a, _m(mode))


def b32_neg(a: int) -> int:
    return _kernel.b32_neg(a)


def b32_abs(a: int) -> int:
    return _kernel.b32_abs(a)


def b32_min(a: int, b: int) -> int:
    return _kernel.b32_min(a, b)


def b32_max(a: int, b: int) -> int:
    return _kernel.b32_max(a, b)


def b32_le(a: int, b: int) -> bool:
    return _kernel.b32_le(a, b)


def b32_lt(a: int, b: int) -> bool:
    return _kernel.b32_lt(a, b)


def from_real(x: float, mode: RoundingMode = RoundingMode.NEAREST_EVEN) -> int:
    return _kernel.from_real(x, _m(mode))


def to_real(u: int) -> float:
    return _kernel.to_real(u)


_UNARY = {"neg", "abs", "sqrt", "exp", "tanh", "sigmoid"}
_BINARY = {"add", "sub", "mul", "div", "min", "max"}


def b32_op(op: str, a: int, b: int | None = None,
           mode: RoundingMode = RoundingMode.NEAREST_EVEN) -> int:
    """Uniform dispatcher over the kernel op roster (unary ops ignore b)."""
    if op in _BINARY:
        if b is None:
            raise ValueError(f"{op} needs two operands")
        if op in ("min", "max"):
            return getattr(_kernel, f"b32_{op}")(a, b)
        return getattr(_kernel, f"b32_{op}")(a, b, _m(mode))
    if op in _UNARY:
        if op in ("neg", "abs"):
            return getattr(_kernel, f"b32_{op}")(a)
        if op == "sqrt":
            return _kernel.b32_sqrt(a, _m(mode))
        return b32_transcendental(op, a)
    raise ValueError(f"unknown b32 op {op!r}")


def b32_transcendental(f: str, x: int) -> int:
    """exp/tanh/sigmoid: binary64 evaluation rounded back to binary32."""
    if is_nan(x):
        return QNAN
    r = to_real(x)
    if f == "exp":
        if r == math.inf:
            return POS_INF
        if r == -math.inf:
            return POS_ZERO
        try:
            v = math.exp(r)
        except OverflowError:
            v = math.inf
    elif f == "tanh":
        v = math.tanh(r)
        if v == 0.0:
            v = math.copysign(0.0, r)  # tanh is odd; preserve the zero's sign
    elif f == "sigmoid":
        if r == math.inf:
            v = 1.0
        elif r == -math.inf:
            v = 0.0
        elif r >= 0:
            v = 1.0 / (1.0 + math.exp(-r))
        else:
            e = math.exp(r)
            v = e / (1.0 + e)
    else:
        raise ValueError(f"unknown transcendental {f!r}")
    return from_real(v, RoundingMode.NEAREST_EVEN)


# --- Hex bit-pattern interchange ----------------------------------------------

def parse_b32_hex(text: str) -> int:
    s = text.strip()
    if not (s.lower().startswith("0x") and len(s) <= 10):
        raise ValueError(f"not a 0x bit-pattern literal: {text!r}")
    u = int(s, 16)
    if not 0 <= u <= 0xFFFFFFFF:
        raise ValueError(f"bit pattern out of range: {text!r}")
    return u


def format_b32_hex(u: int) -> str:
    return f"0x{u:08X}"


def next_up_b32(u: int) -> int:
    """Adjacent grid pattern above u (total order, -0 and +0 adjacent-equal)."""
    if is_nan(u) or u == POS_INF:
        return u
    if is_zero(u):
        return 0x00000001
    if u >> 31:
        v = u - 1
        return NEG_ZERO if v == NEG_ZERO else v
    return u + 1


def next_down_b32(u: int) -> int:
    if is_nan(u) or u == NEG_INF:
        return u
    if is_zero(u):
        return 0x80000001
    if u >> 31:
        return u + 1
    return u - 1


# --- Scalar domain over bit patterns -------------------------------------------

class IEEE32Domain:
    """Bit-level binary32 as a scalar domain (nearest-even everywhere).

    Values are int bit patterns; exceptional values flow as data per IEEE
    rather than raising, matching the kernel semantics.
    """

    name = "ieee32"

    @staticmethod
    def from_float(x: float):
        if math.isnan(x):
            raise DomainError("cannot inject NaN through from_float")
        return from_real(x, RoundingMode.NEAREST_EVEN)

    @staticmethod
    def from_decimal(text: str):
        return from_real(float(text), RoundingMode.NEAREST_EVEN)

    @staticmethod
    def to_float(u: int) -> float:
        return to_real(u)

    zero = staticmethod(lambda: POS_ZERO)
    one = staticmethod(lambda: ONE)

    add = staticmethod(lambda a, b: _kernel.b32_add(a, b, 0))
    sub = staticmethod(lambda a, b: _kernel.b32_sub(a, b, 0))
    mul = staticmethod(lambda a, b: _kernel.b32_mul(a, b, 0))
    div = staticmethod(lambda a, b: _kernel.b32_div(a, b, 0))
    neg = staticmethod(lambda a: _kernel.b32_neg(a))
    abs = staticmethod(lambda a: _kernel.b32_abs(a))
    min = staticmethod(lambda a, b: _kernel.b32_min(a, b))
    max = staticmethod(lambda a, b: _kernel.b32_max(a, b))
    lt = staticmethod(lambda a, b: _kernel.b32_lt(a, b))
    le = staticmethod(lambda a, b: _kernel.b32_le(a, b))

    sqrt = staticmethod(lambda a: _kernel.b32_sqrt(a, 0))
    exp = staticmethod(lambda a: b32_transcendental("exp", a))
    tanh = staticmethod(lambda a: b32_transcendental("tanh", a))
    sigmoid = staticmethod(lambda a: b32_transcendental("sigmoid", a))


# --- Batch helpers (hot loops; fall back to scalar loops without the extension) --

def binary_op_array(op: str, a, b, mode: RoundingMode = RoundingMode.NEAREST_EVEN):
    import numpy as np

    if hasattr(_kernel, "binary_op_arr"):
        return _kernel.binary_op_arr(op, a, b, _m(mode))
    a = np.asarray(a, dtype=np.uint32)
    b = np.asarray(b, dtype=np.uint32)
    fn = getattr(_kernel_py, f"b32_{op}")
    mi = _m(mode)
    if op in ("min", "max"):
        out = [fn(int(x), int(y)) for x, y in zip(a.tolist(), b.tolist())]
    else:
        out = [fn(int(x), int(y), mi) for x, y in zip(a.tolist(), b.tolist())]
    return np.array(out, dtype=np.uint32)


def sqrt_array(a, mode: RoundingMode = RoundingMode.NEAREST_EVEN):
    import numpy as np

    if hasattr(_kernel, "sqrt_arr"):
        return _kernel.sqrt_arr(a, _m(mode))
    a = np.asarray(a, dtype=np.uint32)
    return np.array([_kernel_py.b32_sqrt(int(x), _m(mode)) for x in a.tolist()], dtype=np.uint32)
