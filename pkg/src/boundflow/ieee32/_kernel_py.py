"""Pure-Python IEEE-754 binary32 kernel.

Values are 32-bit patterns held in plain ints.  Arithmetic runs on exact
integer significands (Python bignums make alignment and products exact;
division and square root keep a sticky bit), so results never depend on
host float behavior; the host only appears in test oracles.  Every invalid
operation and every NaN input produces the single canonical quiet NaN
0x7FC00000.

The compiled twin in ``_kernel_c.pyx`` implements the same semantics with
bounded 64-bit guard/round/sticky arithmetic; the backends are
cross-checked bit-for-bit by the test suite.
"""

import math
import struct

RNE = 0  # round to nearest, ties to even
RTN = 1  # toward negative infinity
RTP = 2  # toward positive infinity

SIGN = 0x80000000
PINF = 0x7F800000
NINF = 0xFF800000
QNAN = 0x7FC00000
MAX_FINITE = 0x7F7FFFFF
NEG_MAX_FINITE = 0xFF7FFFFF


def is_nan(u):
    return (u & 0x7FFFFFFF) > 0x7F800000


def is_inf(u):
    return (u & 0x7FFFFFFF) == 0x7F800000


def is_zero(u):
    return (u & 0x7FFFFFFF) == 0


def is_finite(u):
    return (u & 0x7F800000) != 0x7F800000


def _overflow(sign, mode):
    # Directed modes saturate on the inward side, IEEE 754-2019 4.3.2.
    if mode == RTP:
        return NEG_MAX_FINITE if sign else PINF
    if mode == RTN:
        return NINF if sign else MAX_FINITE
    return NINF if sign else PINF


def _round_pack(sign, frac, exp, sticky, mode):
    """Encode (-1)^sign * (frac + theta) * 2**exp, theta in (0,1) iff sticky.

    frac is an exact nonnegative integer of any width.  sticky is only ever
    set by div/sqrt, whose fracs carry >= 26 significant bits, so the
    widening branch below never sees it.
    """
    if frac == 0:
        return SIGN if sign else 0
    bl = frac.bit_length()
    e_top = exp + bl - 1
    lsb_exp = e_top - 23
    if lsb_exp < -149:
        lsb_exp = -149
    shift = lsb_exp - exp

    if shift <= 0:
        kept = frac << (-shift)
        increment = False
    else:
        kept = frac >> shift
        rem = frac & ((1 << shift) - 1)
        if mode == RNE:
            half = 1 << (shift - 1)
            increment = rem > half or (rem == half and (sticky or (kept & 1)))
        elif mode == RTP:
            increment = sign == 0 and (rem != 0 or sticky)
        else:
            increment = sign == 1 and (rem != 0 or sticky)

    if increment:
        kept += 1
    if kept == 0:
        return SIGN if sign else 0
    if kept.bit_length() > 24:
        kept >>= 1
        lsb_exp += 1
    e_top = lsb_exp + kept.bit_length() - 1
    if e_top > 127:
        return _overflow(sign, mode)
    if kept.bit_length() == 24:
        return (sign << 31) | ((e_top + 127) << 23) | (kept & 0x7FFFFF)
    # subnormal: lsb_exp == -149 and fewer than 24 significant bits
    return (sign << 31) | kept


def _split(u):
    """(sign, significand, exponent) with value = (-1)^sign * sig * 2**exp."""
    e = (u >> 23) & 0xFF
    f = u & 0x7FFFFF
    if e == 0:
        return u >> 31, f, -149
    return u >> 31, f | 0x800000, e - 150


def b32_add(a, b, mode):
    if is_nan(a) or is_nan(b):
        return QNAN
    a_inf = is_inf(a)
    b_inf = is_inf(b)
    if a_inf or b_inf:
        if a_inf and b_inf and ((a ^ b) & SIGN):
            return QNAN
        return a if a_inf else b
    sa, fa, ea = _split(a)
    sb, fb, eb = _split(b)
    if fa == 0 and fb == 0:
        if sa == sb:
            return a
        return SIGN if mode == RTN else 0
    e = ea if ea < eb else eb
    va = fa << (ea - e)
    vb = fb << (eb - e)
    s = (-va if sa else va) + (-vb if sb else vb)
    if s == 0:
        # exact cancellation: +0 in every mode except toward -inf
        return SIGN if mode == RTN else 0
    if s < 0:
        return _round_pack(1, -s, e, False, mode)
    return _round_pack(0, s, e, False, mode)


def b32_neg(a):
    if is_nan(a):
        return QNAN
    return a ^ SIGN


def b32_sub(a, b, mode):
    if is_nan(b):
        return QNAN
    return b32_add(a, b ^ SIGN, mode)


def b32_mul(a, b, mode):
    if is_nan(a) or is_nan(b):
        return QNAN
    sign = ((a ^ b) >> 31) & 1
    if is_inf(a) or is_inf(b):
        if is_zero(a) or is_zero(b):
            return QNAN
        return (sign << 31) | PINF
    if is_zero(a) or is_zero(b):
        return sign << 31
    _, fa, ea = _split(a)
    _, fb, eb = _split(b)
    return _round_pack(sign, fa * fb, ea + eb, False, mode)


def b32_div(a, b, mode):
    if is_nan(a) or is_nan(b):
        return QNAN
    sign = ((a ^ b) >> 31) & 1
    if is_inf(a):
        if is_inf(b):
            return QNAN
        return (sign << 31) | PINF
    if is_inf(b):
        return sign << 31
    if is_zero(b):
        if is_zero(a):
            return QNAN
        return (sign << 31) | PINF
    if is_zero(a):
        return sign << 31
    _, fa, ea = _split(a)
    _, fb, eb = _split(b)
    while fb < 0x800000:  # normalize subnormal operands
        fb <<= 1
        eb -= 1
    while fa < 0x800000:
        fa <<= 1
        ea -= 1
    num = fa << 26
    q = num // fb
    sticky = q * fb != num
    return _round_pack(sign, q, ea - eb - 26, sticky, mode)


def b32_sqrt(a, mode):
    if is_nan(a):
        return QNAN
    if is_zero(a):
        return a  # sqrt(-0) is -0
    if a & SIGN:
        return QNAN
    if is_inf(a):
        return PINF
    _, f, e = _split(a)
    while f < 0x800000:
        f <<= 1
        e -= 1
    if e & 1:
        f <<= 1
        e -= 1
    m = f << 28
    r = math.isqrt(m)
    sticky = r * r != m
    return _round_pack(0, r, e // 2 - 14, sticky, mode)


def _order_key(u):
    # Total order with -0 < +0; only called on non-NaN patterns.
    mag = u & 0x7FFFFFFF
    return -mag - 1 if (u >> 31) else mag


def b32_min(a, b):
    if is_nan(a) or is_nan(b):
        return QNAN
    return a if _order_key(a) <= _order_key(b) else b


def b32_max(a, b):
    if is_nan(a) or is_nan(b):
        return QNAN
    return b if _order_key(a) <= _order_key(b) else a


def b32_abs(a):
    if is_nan(a):
        return QNAN
    return a & 0x7FFFFFFF


def b32_le(a, b):
    """IEEE <= on non-NaN patterns (signed zeros compare equal)."""
    if is_nan(a) or is_nan(b):
        raise ValueError("ordered comparison with NaN")
    if is_zero(a) and is_zero(b):
        return True
    return _order_key(a) <= _order_key(b)


def b32_lt(a, b):
    if is_nan(a) or is_nan(b):
        raise ValueError("ordered comparison with NaN")
    if is_zero(a) and is_zero(b):
        return False
    return _order_key(a) < _order_key(b)


def from_real(x, mode):
    """Round a binary64 value (or +-inf) to a binary32 pattern; rejects NaN."""
    if math.isnan(x):
        raise ValueError("from_real of NaN")
    if x == math.inf:
        return PINF
    if x == -math.inf:
        return NINF
    bits = struct.unpack("<Q", struct.pack("<d", x))[0]
    sign = bits >> 63
    e = (bits >> 52) & 0x7FF
    f = bits & 0xFFFFFFFFFFFFF
    if e == 0:
        if f == 0:
            return SIGN if sign else 0
        return _round_pack(sign, f, -1074, False, mode)
    return _round_pack(sign, f | (1 << 52), e - 1075, False, mode)


def to_real(u):
    """Exact binary64 value of a finite or infinite pattern; raises on NaN."""
    u = int(u)  # tolerate numpy scalars
    if is_nan(u):
        raise ValueError("to_real of NaN")
    if is_inf(u):
        return -math.inf if (u >> 31) else math.inf
    sign, f, e = _split(u)
    v = math.ldexp(f, e)
    return -v if sign else v
