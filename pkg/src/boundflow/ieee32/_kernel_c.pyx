# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled IEEE-754 binary32 kernel.

Bounded 64-bit twin of ``_kernel_py``: alignment folds lost bits into a
sticky jam bit instead of using exact bignums, which keeps every
intermediate in a machine word.  Scalar entry points mirror the pure
kernel one-for-one and must stay bit-identical to it; batch entry points
exist for the hot test/verification loops.
"""

import numpy as np

ctypedef unsigned long long u64
ctypedef long long i64
ctypedef unsigned int u32

cdef enum:
    RNE = 0
    RTN = 1
    RTP = 2

cdef u32 SIGN = 0x80000000u
cdef u32 PINF = 0x7F800000u
cdef u32 NINF = 0xFF800000u
cdef u32 QNAN = 0x7FC00000u
cdef u32 MAX_FINITE = 0x7F7FFFFFu
cdef u32 NEG_MAX_FINITE = 0xFF7FFFFFu


cdef inline bint _is_nan(u32 u) nogil:
    return (u & 0x7FFFFFFFu) > 0x7F800000u

cdef inline bint _is_inf(u32 u) nogil:
    return (u & 0x7FFFFFFFu) == 0x7F800000u

cdef inline bint _is_zero(u32 u) nogil:
    return (u & 0x7FFFFFFFu) == 0

cdef inline bint _is_finite(u32 u) nogil:
    return (u & 0x7F800000u) != 0x7F800000u

cdef inline int _bit_length(u64 x) nogil:
    cdef int n = 0
    while x:
        x >>= 1
        n += 1
    return n

cdef inline u32 _overflow_pack(int sign, int mode) nogil:
    if mode == RTP:
        return NEG_MAX_FINITE if sign else PINF
    if mode == RTN:
        return NINF if sign else MAX_FINITE
    return NINF if sign else PINF


cdef u32 _round_pack(int sign, u64 frac, int exp, bint sticky, int mode) nogil:
    """Twin of the pure kernel's _round_pack; frac <= 53 bits, jam-aware."""
    cdef int bl, e_top, lsb_exp, shift
    cdef u64 kept, rem, half
    cdef bint increment = False

    if frac == 0:
        return SIGN if sign else 0
    bl = _bit_length(frac)
    e_top = exp + bl - 1
    lsb_exp = e_top - 23
    if lsb_exp < -149:
        lsb_exp = -149
    shift = lsb_exp - exp

    if shift <= 0:
        kept = frac << (-shift)
    elif shift >= 64:
        # e_top <= -161 here for every caller: strictly below half the
        # minimum subnormal, so only directed modes can produce a nonzero.
        kept = 0
        if mode == RTP:
            increment = sign == 0
        elif mode == RTN:
            increment = sign == 1
    else:
        kept = frac >> shift
        rem = frac & (((<u64>1) << shift) - 1)
        if mode == RNE:
            half = (<u64>1) << (shift - 1)
            increment = rem > half or (rem == half and (sticky or (kept & 1)))
        elif mode == RTP:
            increment = sign == 0 and (rem != 0 or sticky)
        else:
            increment = sign == 1 and (rem != 0 or sticky)

    if increment:
        kept += 1
    if kept == 0:
        return SIGN if sign else 0
    if _bit_length(kept) > 24:
        kept >>= 1
        lsb_exp += 1
    e_top = lsb_exp + _bit_length(kept) - 1
    if e_top > 127:
        return _overflow_pack(sign, mode)
    if _bit_length(kept) == 24:
        return ((<u32>sign) << 31) | ((<u32>(e_top + 127)) << 23) | ((<u32>kept) & 0x7FFFFFu)
    return ((<u32>sign) << 31) | <u32>kept


cdef inline void _split(u32 u, int* sign, u64* frac, int* exp) nogil:
    cdef int e = (u >> 23) & 0xFF
    cdef u64 f = u & 0x7FFFFFu
    sign[0] = u >> 31
    if e == 0:
        frac[0] = f
        exp[0] = -149
    else:
        frac[0] = f | 0x800000u
        exp[0] = e - 150


cdef u32 _add(u32 a, u32 b, int mode) nogil:
    cdef int sa, sb, ea, eb, d, sign
    cdef u64 fa, fb, s, lost
    cdef u32 t
    if _is_nan(a) or _is_nan(b):
        return QNAN
    if _is_inf(a) or _is_inf(b):
        if _is_inf(a) and _is_inf(b) and ((a ^ b) & SIGN):
            return QNAN
        return a if _is_inf(a) else b
    _split(a, &sa, &fa, &ea)
    _split(b, &sb, &fb, &eb)
    if fa == 0 and fb == 0:
        if sa == sb:
            return a
        return SIGN if mode == RTN else 0
    # order by magnitude so the difference below is nonnegative
    if ea < eb or (ea == eb and fa < fb):
        d = sa; sa = sb; sb = d
        s = fa; fa = fb; fb = s
        d = ea; ea = eb; eb = d
    d = ea - eb
    fa <<= 6
    fb <<= 6
    if d > 0:
        if d > 31:
            fb = 1 if fb != 0 else 0
        else:
            lost = fb & (((<u64>1) << d) - 1)
            fb >>= d
            if lost:
                fb |= 1
    if sa == sb:
        s = fa + fb
        sign = sa
    else:
        s = fa - fb
        sign = sa
        if s == 0:
            return SIGN if mode == RTN else 0
    return _round_pack(sign, s, ea - 6, False, mode)


cdef u32 _mul(u32 a, u32 b, int mode) nogil:
    cdef int sa, sb, ea, eb, sign
    cdef u64 fa, fb
    if _is_nan(a) or _is_nan(b):
        return QNAN
    sign = ((a ^ b) >> 31) & 1
    if _is_inf(a) or _is_inf(b):
        if _is_zero(a) or _is_zero(b):
            return QNAN
        return ((<u32>sign) << 31) | PINF
    if _is_zero(a) or _is_zero(b):
        return (<u32>sign) << 31
    _split(a, &sa, &fa, &ea)
    _split(b, &sb, &fb, &eb)
    return _round_pack(sign, fa * fb, ea + eb, False, mode)


cdef u32 _div(u32 a, u32 b, int mode) nogil:
    cdef int sa, sb, ea, eb, sign
    cdef u64 fa, fb, num, q
    if _is_nan(a) or _is_nan(b):
        return QNAN
    sign = ((a ^ b) >> 31) & 1
    if _is_inf(a):
        if _is_inf(b):
            return QNAN
        return ((<u32>sign) << 31) | PINF
    if _is_inf(b):
        return (<u32>sign) << 31
    if _is_zero(b):
        if _is_zero(a):
            return QNAN
        return ((<u32>sign) << 31) | PINF
    if _is_zero(a):
        return (<u32>sign) << 31
    _split(a, &sa, &fa, &ea)
    _split(b, &sb, &fb, &eb)
    while fb < 0x800000u:
        fb <<= 1
        eb -= 1
    while fa < 0x800000u:
        fa <<= 1
        ea -= 1
    num = fa << 26
    q = num / fb
    return _round_pack(sign, q, ea - eb - 26, q * fb != num, mode)


cdef u64 _isqrt64(u64 n) nogil:
    cdef u64 x = 0, bit = (<u64>1) << 52
    while bit > n:
        bit >>= 2
    while bit:
        if n >= x + bit:
            n -= x + bit
            x = (x >> 1) + bit
        else:
            x >>= 1
        bit >>= 2
    return x


cdef u32 _sqrt(u32 a, int mode) nogil:
    cdef int sa, e
    cdef u64 f, m, r
    if _is_nan(a):
        return QNAN
    if _is_zero(a):
        return a
    if a & SIGN:
        return QNAN
    if _is_inf(a):
        return PINF
    _split(a, &sa, &f, &e)
    while f < 0x800000u:
        f <<= 1
        e -= 1
    if e & 1:
        f <<= 1
        e -= 1
    m = f << 28
    r = _isqrt64(m)
    # C division floors toward zero; e is even and possibly negative
    return _round_pack(0, r, (e >> 1) - 14, r * r != m, mode)


cdef inline i64 _order_key(u32 u) nogil:
    cdef i64 mag = u & 0x7FFFFFFFu
    return -mag - 1 if (u >> 31) else mag


cdef u32 _min(u32 a, u32 b) nogil:
    if _is_nan(a) or _is_nan(b):
        return QNAN
    return a if _order_key(a) <= _order_key(b) else b


cdef u32 _max(u32 a, u32 b) nogil:
    if _is_nan(a) or _is_nan(b):
        return QNAN
    return b if _order_key(a) <= _order_key(b) else a


# --- Python-visible scalar API (mirrors _kernel_py) ---------------------------

def b32_add(a, b, mode):
    return _add(<u32>a, <u32>b, <int>mode)

def b32_sub(a, b, mode):
    if _is_nan(<u32>b):
        return QNAN
    return _add(<u32>a, (<u32>b) ^ SIGN, <int>mode)

def b32_mul(a, b, mode):
    return _mul(<u32>a, <u32>b, <int>mode)

def b32_div(a, b, mode):
    return _div(<u32>a, <u32>b, <int>mode)

def b32_sqrt(a, mode):
    return _sqrt(<u32>a, <int>mode)

def b32_min(a, b):
    return _min(<u32>a, <u32>b)

def b32_max(a, b):
    return _max(<u32>a, <u32>b)

def b32_neg(a):
    if _is_nan(<u32>a):
        return QNAN
    return (<u32>a) ^ SIGN

def b32_abs(a):
    if _is_nan(<u32>a):
        return QNAN
    return (<u32>a) & 0x7FFFFFFFu

def b32_le(a, b):
    if _is_nan(<u32>a) or _is_nan(<u32>b):
        raise ValueError("ordered comparison with NaN")
    if _is_zero(<u32>a) and _is_zero(<u32>b):
        return True
    return _order_key(<u32>a) <= _order_key(<u32>b)

def b32_lt(a, b):
    if _is_nan(<u32>a) or _is_nan(<u32>b):
        raise ValueError("ordered comparison with NaN")
    if _is_zero(<u32>a) and _is_zero(<u32>b):
        return False
    return _order_key(<u32>a) < _order_key(<u32>b)

def is_nan(u):
    return _is_nan(<u32>u)

def is_inf(u):
    return _is_inf(<u32>u)

def is_zero(u):
    return _is_zero(<u32>u)

def is_finite(u):
    return _is_finite(<u32>u)


cdef union _f64bits:
    double d
    u64 u


def from_real(x, mode):
    """Round a binary64 value (or +-inf) to a binary32 pattern; rejects NaN."""
    cdef double xd = x
    cdef _f64bits cv
    cdef u64 bits, f
    cdef int sign, e
    if xd != xd:
        raise ValueError("from_real of NaN")
    cv.d = xd
    bits = cv.u
    sign = <int>(bits >> 63)
    e = <int>((bits >> 52) & 0x7FF)
    f = bits & 0xFFFFFFFFFFFFFull
    if e == 0x7FF:
        return NINF if sign else PINF
    if e == 0:
        if f == 0:
            return SIGN if sign else 0
        return _round_pack(sign, f, -1074, False, <int>mode)
    return _round_pack(sign, f | ((<u64>1) << 52), e - 1075, False, <int>mode)


def to_real(u):
    """Exact binary64 value of a finite or infinite pattern; raises on NaN."""
    cdef u32 v = <u32>u
    cdef int sign, e
    cdef u64 f
    cdef double out
    if _is_nan(v):
        raise ValueError("to_real of NaN")
    if _is_inf(v):
        return float("-inf") if (v >> 31) else float("inf")
    _split(v, &sign, &f, &e)
    out = <double>f
    while e > 0:
        out *= 2.0
        e -= 1
    while e < 0:
        # halving is exact in binary64 down to 2**-1074; f*2**-149 stays normal
        out *= 0.5
        e += 1
    return -out if sign else out


# --- Batch entry points --------------------------------------------------------

def binary_op_arr(str op, a, b, mode):
    """Elementwise binary op over uint32 arrays (broadcasting not supported)."""
    cdef u32[::1] av = np.ascontiguousarray(a, dtype=np.uint32)
    cdef u32[::1] bv = np.ascontiguousarray(b, dtype=np.uint32)
    if av.shape[0] != bv.shape[0]:
        raise ValueError("length mismatch")
    out = np.empty(av.shape[0], dtype=np.uint32)
    cdef u32[::1] ov = out
    cdef Py_ssize_t i, n = av.shape[0]
    cdef int m = mode
    if op == "add":
        with nogil:
            for i in range(n):
                ov[i] = _add(av[i], bv[i], m)
    elif op == "sub":
        with nogil:
            for i in range(n):
                ov[i] = QNAN if _is_nan(bv[i]) else _add(av[i], bv[i] ^ SIGN, m)
    elif op == "mul":
        with nogil:
            for i in range(n):
                ov[i] = _mul(av[i], bv[i], m)
    elif op == "div":
        with nogil:
            for i in range(n):
                ov[i] = _div(av[i], bv[i], m)
    elif op == "min":
        with nogil:
            for i in range(n):
                ov[i] = _min(av[i], bv[i])
    elif op == "max":
        with nogil:
            for i in range(n):
                ov[i] = _max(av[i], bv[i])
    else:
        raise ValueError(f"unknown batch op {op!r}")
    return out


def sqrt_arr(a, mode):
    cdef u32[::1] av = np.ascontiguousarray(a, dtype=np.uint32)
    out = np.empty(av.shape[0], dtype=np.uint32)
    cdef u32[::1] ov = out
    cdef Py_ssize_t i, n = av.shape[0]
    cdef int m = mode
    with nogil:
        for i in range(n):
            ov[i] = _sqrt(av[i], m)
    return out
