import math

import numpy as np
import pytest

from boundflow import ieee32 as k
from boundflow.ieee32.interval import (
    B32Interval,
    iv_add,
    iv_div,
    iv_exp,
    iv_mul,
    iv_op,
    iv_sigmoid,
    iv_sqrt,
    iv_sub,
    iv_tanh,
)
from boundflow.scalars import RealInterval, RealIntervalDomain, RoundingMode

NE = RoundingMode.NEAREST_EVEN
ONE = 0x3F800000
PZ, NZ = 0x00000000, 0x80000000
PINF, NINF = 0x7F800000, 0xFF800000


def test_interval_validation():
    with pytest.raises(ValueError):
        B32Interval(ONE, PZ)
    with pytest.raises(ValueError):
        B32Interval(0x7FC00000, PINF)
    assert B32Interval(NZ, PZ).contains(PZ)


def test_add_tie_enclosure_directed_vs_naive():
    # Table of regression behaviors: 1 + 2**-24 must stay inside the
    # directed-endpoint interval, while naive nearest endpoints collapse.
    one = B32Interval.point(ONE)
    tiny = B32Interval.point(k.from_real(2.0 ** -24))
    r = iv_add(one, tiny)
    exact = 1.0 + 2.0 ** -24
    assert k.to_real(r.lo) <= exact <= k.to_real(r.hi)
    assert k.to_real(r.lo) == 1.0 and k.to_real(r.hi) == 1.0 + 2.0 ** -23
    naive = k.b32_add(ONE, k.from_real(2.0 ** -24), NE)
    collapsed = B32Interval(naive, naive)
    assert not (k.to_real(collapsed.lo) <= exact <= k.to_real(collapsed.hi))


def test_div_by_negative_zero_widens():
    r = iv_div(B32Interval.point(ONE), B32Interval.point(NZ))
    assert r.lo == NINF and r.hi == PINF


def test_div_spanning_zero_widens():
    r = iv_div(B32Interval.point(ONE), B32Interval.from_floats(-1.0, 1.0))
    assert r.lo == NINF and r.hi == PINF


def test_mul_identity_exact():
    i = B32Interval.from_floats(-2.5, 3.25)
    one = B32Interval.point(ONE)
    r = iv_mul(i, one)
    assert r.lo == i.lo and r.hi == i.hi


def test_polynomial_encloses_real_oracle():
    # p(x) = x**2 + 0.1 x - 0.5 on [-0.5, 0.5], evaluated the same way in
    # both interval arithmetics; the binary32 result must enclose the
    # binary64 oracle, and both must enclose the calculus-derived exact range.
    xb = B32Interval.from_floats(-0.5, 0.5)
    tenth_b = B32Interval.point(k.from_real(0.1))
    half_b = B32Interval.point(k.from_real(0.5))
    pb = iv_sub(iv_add(iv_mul(xb, xb), iv_mul(tenth_b, xb)), half_b)

    D = RealIntervalDomain
    xr = RealInterval(-0.5, 0.5)
    c1 = RealInterval.point(float(np.float32(0.1)))
    c2 = RealInterval.point(0.5)
    pr = D.sub(D.add(D.mul(xr, xr), D.mul(c1, xr)), c2)

    assert k.to_real(pb.lo) <= pr.lo and pr.hi <= k.to_real(pb.hi)

    # exact range of the quadratic: vertex at -0.05, increasing to the right
    vertex = -0.05
    p = lambda x: x * x + 0.1 * x - 0.5
    exact_lo = p(vertex)
    exact_hi = max(p(-0.5), p(0.5))
    assert k.to_real(pb.lo) <= exact_lo and exact_hi <= k.to_real(pb.hi)
    assert pr.lo <= exact_lo and exact_hi <= pr.hi


def test_interval_soundness_sampled(rng):
    ops_bin = ("add", "sub", "mul", "div", "min", "max")
    ops_un = ("neg", "abs", "sqrt", "exp", "tanh", "sigmoid")
    for _ in range(250):
        a_lo, b_lo = rng.uniform(-10, 10, 2)
        a_w, b_w = rng.uniform(0, 5, 2)
        ia = B32Interval.from_floats(a_lo, a_lo + a_w)
        ib = B32Interval.from_floats(b_lo, b_lo + b_w)
        xs = [k.from_real(v) for v in rng.uniform(a_lo, a_lo + a_w, 25)]
        ys = [k.from_real(v) for v in rng.uniform(b_lo, b_lo + b_w, 25)]
        for op in ops_bin:
            res = iv_op(op, ia, ib)
            for x, y in zip(xs, ys):
                v = k.b32_op(op, x, y)
                if k.is_nan(v):
                    assert res.lo == NINF and res.hi == PINF
                else:
                    assert res.contains(v), (op, hex(x), hex(y))
        for op in ops_un:
            res = iv_op(op, ia)
            for x in xs:
                v = k.b32_op(op, x)
                if k.is_nan(v):
                    assert res.lo == NINF and res.hi == PINF
                else:
                    assert res.contains(v), (op, hex(x))


def test_sqrt_negative_widens():
    r = iv_sqrt(B32Interval.from_floats(-1.0, 4.0))
    assert r.lo == NINF and r.hi == PINF
    r2 = iv_sqrt(B32Interval.from_floats(0.0, 4.0))
    assert k.to_real(r2.lo) <= 0.0 and k.to_real(r2.hi) >= 2.0


def test_transcendental_clamps():
    r = iv_tanh(B32Interval.from_floats(-50.0, 50.0))
    assert k.to_real(r.lo) >= -1.0 and k.to_real(r.hi) <= 1.0
    r = iv_sigmoid(B32Interval.from_floats(-50.0, 50.0))
    assert k.to_real(r.lo) >= 0.0 and k.to_real(r.hi) <= 1.0
    r = iv_exp(B32Interval.from_floats(-200.0, 0.0))
    assert k.to_real(r.lo) >= 0.0


def test_exp_overflow_to_inf():
    r = iv_exp(B32Interval.from_floats(0.0, 200.0))
    assert r.hi == PINF
    assert k.to_real(r.lo) <= 1.0


def _to_real_arr(bits: np.ndarray) -> np.ndarray:
    # exact for finite patterns; inf maps to inf (NaN filtered by callers)
    return bits.astype(np.uint32).view(np.float32).astype(np.float64)


def test_interval_soundness_full_scale(rng):
    # module invariant at its stated scale: 1e4 interval pairs x 100 point
    # samples per arithmetic op, batched through the kernel
    n = 10_000
    m = 100
    a_lo = rng.uniform(-20, 20, n)
    a_w = rng.uniform(0, 8, n)
    b_lo = rng.uniform(-20, 20, n)
    b_w = rng.uniform(0, 8, n)
    ia = [B32Interval.from_floats(l, l + w) for l, w in zip(a_lo, a_w)]
    ib = [B32Interval.from_floats(l, l + w) for l, w in zip(b_lo, b_w)]
    xs = np.empty((n, m), dtype=np.uint32)
    ys = np.empty((n, m), dtype=np.uint32)
    for i in range(n):
        xs[i] = np.array(
            [k.from_real(v) for v in rng.uniform(k.to_real(ia[i].lo), k.to_real(ia[i].hi), m)],
            dtype=np.uint32,
        )
        ys[i] = np.array(
            [k.from_real(v) for v in rng.uniform(k.to_real(ib[i].lo), k.to_real(ib[i].hi), m)],
            dtype=np.uint32,
        )
    flat_x = xs.ravel()
    flat_y = ys.ravel()
    violations = 0
    for op in ("add", "sub", "mul", "div", "min", "max"):
        res = [iv_op(op, ia[i], ib[i]) for i in range(n)]
        lo = np.repeat(np.array([k.to_real(r.lo) for r in res]), m)
        hi = np.repeat(np.array([k.to_real(r.hi) for r in res]), m)
        out = k.binary_op_array(op, flat_x, flat_y)
        nan = (out & np.uint32(0x7FFFFFFF)) > np.uint32(0x7F800000)
        vals = _to_real_arr(np.where(nan, 0, out))
        # NaN results require the widened full interval
        widened = np.isneginf(lo) & np.isposinf(hi)
        violations += int((nan & ~widened).sum())
        ok = (~nan) & ((vals < lo) | (vals > hi))
        violations += int(ok.sum())
    for op in ("neg", "abs", "sqrt"):
        res = [iv_op(op, ia[i]) for i in range(n)]
        lo = np.repeat(np.array([k.to_real(r.lo) for r in res]), m)
        hi = np.repeat(np.array([k.to_real(r.hi) for r in res]), m)
        if op == "sqrt":
            out = k.sqrt_array(flat_x)
        else:
            fn = k.b32_neg if op == "neg" else k.b32_abs
            out = np.array([fn(int(v)) for v in flat_x.tolist()], dtype=np.uint32)
        nan = (out & np.uint32(0x7FFFFFFF)) > np.uint32(0x7F800000)
        vals = _to_real_arr(np.where(nan, 0, out))
        widened = np.isneginf(lo) & np.isposinf(hi)
        violations += int((nan & ~widened).sum())
        violations += int(((~nan) & ((vals < lo) | (vals > hi))).sum())
    assert violations == 0
