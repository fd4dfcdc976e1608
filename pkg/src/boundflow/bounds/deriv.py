"""Directional first-derivative interval pass for scalar-input graphs.

Propagates (value box, d value / d x box) pairs through the smooth op
roster: affine ops map derivative intervals through their weights, tanh
and sigmoid multiply by the interval range of their derivative over the
value box, and elementwise products use the bilinear product rule.  The
input must be a single scalar.
"""

from __future__ import annotations

import math

from ..graph import (
    Add,
    Flatten,
    Input,
    Linear,
    MulElem,
    Param,
    Reshape,
    Sub,
    Tanh,
    Sigmoid,
    WellTypedGraph,
)
from ..scalars import RealRef
from ..shapes import TensorValue
from .boxes import BoxEntry, REAL_BACKING
from .ibp import _affine_bounds, _mul_interval, ibp_step


class DerivUnsupported(RuntimeError):
    def __init__(self, node_id: int, kind_name: str):
        super().__init__(f"node {node_id}: {kind_name} not in the derivative-pass roster")
        self.node_id = node_id


def _tanh_prime_range(l: float, u: float) -> tuple[float, float]:
    # 1 - tanh(z)^2 is even and decreasing in |z|
    def g(z: float) -> float:
        t = math.tanh(z)
        return 1.0 - t * t

    far = max(abs(l), abs(u))
    near = 0.0 if l <= 0.0 <= u else min(abs(l), abs(u))
    return g(far), g(near)


def _sigmoid_prime_range(l: float, u: float) -> tuple[float, float]:
    def g(z: float) -> float:
        s = RealRef.sigmoid(z)
        return s * (1.0 - s)

    far = max(abs(l), abs(u))
    near = 0.0 if l <= 0.0 <= u else min(abs(l), abs(u))
    return g(far), g(near)


def deriv_ibp1(
    g: WellTypedGraph,
    params_by_name: dict[str, TensorValue],
    input_entry: BoxEntry,
) -> dict[int, tuple[BoxEntry, BoxEntry]]:
    """Per-node (value box, first-derivative box) w.r.t. the scalar input."""
    if len(g.input_ids) != 1 or not g.node(g.input_ids[0]).out_shape.is_scalar():
        raise ValueError("derivative pass requires exactly one scalar input")
    bk = REAL_BACKING
    out: dict[int, tuple[BoxEntry, BoxEntry]] = {}

    for node in g.nodes:
        kind = node.kind
        shape = node.out_shape
        if isinstance(kind, Input):
            val = input_entry
            dv = BoxEntry(TensorValue(shape, (1.0,)), TensorValue(shape, (1.0,)))
        elif isinstance(kind, Param):
            t = params_by_name[kind.key]
            fl = TensorValue(shape, tuple(float(v) for v in t.data))
            val = BoxEntry(fl, fl)
            zeros = TensorValue(shape, (0.0,) * shape.size)
            dv = BoxEntry(zeros, zeros)
        elif isinstance(kind, Linear):
            pv, pd = out[node.parents[0]]
            val = ibp_step(kind, [pv], shape, bk, params_by_name)
            w = params_by_name[kind.weight_key]
            zero_bias = [0.0] * kind.out_dim
            lo, hi = _affine_bounds(
                [float(x) for x in w.data], pd.lower.data, pd.upper.data,
                zero_bias, kind.out_dim, kind.in_dim, bk,
            )
            dv = BoxEntry(TensorValue(shape, tuple(lo)), TensorValue(shape, tuple(hi)))
        elif isinstance(kind, (Add, Sub)):
            v1, d1 = out[node.parents[0]]
            v2, d2 = out[node.parents[1]]
            val = ibp_step(kind, [v1, v2], shape, bk, params_by_name)
            if isinstance(kind, Add):
                lo = tuple(a + b for a, b in zip(d1.lower.data, d2.lower.data))
                hi = tuple(a + b for a, b in zip(d1.upper.data, d2.upper.data))
            else:
                lo = tuple(a - b for a, b in zip(d1.lower.data, d2.upper.data))
                hi = tuple(a - b for a, b in zip(d1.upper.data, d2.lower.data))
            dv = BoxEntry(TensorValue(shape, lo), TensorValue(shape, hi))
        elif isinstance(kind, MulElem):
            v1, d1 = out[node.parents[0]]
            v2, d2 = out[node.parents[1]]
            val = ibp_step(kind, [v1, v2], shape, bk, params_by_name)
            lo_out = []
            hi_out = []
            for i in range(shape.size):
                t1_lo, t1_hi = _mul_interval(d1.lower.data[i], d1.upper.data[i],
                                             v2.lower.data[i], v2.upper.data[i], bk)
                t2_lo, t2_hi = _mul_interval(v1.lower.data[i], v1.upper.data[i],
                                             d2.lower.data[i], d2.upper.data[i], bk)
                lo_out.append(t1_lo + t2_lo)
                hi_out.append(t1_hi + t2_hi)
            dv = BoxEntry(TensorValue(shape, tuple(lo_out)), TensorValue(shape, tuple(hi_out)))
        elif isinstance(kind, (Tanh, Sigmoid)):
            pv, pd = out[node.parents[0]]
            val = ibp_step(kind, [pv], shape, bk, params_by_name)
            rng = _tanh_prime_range if isinstance(kind, Tanh) else _sigmoid_prime_range
            lo_out = []
            hi_out = []
            for i in range(shape.size):
                g_lo, g_hi = rng(pv.lower.data[i], pv.upper.data[i])
                lo, hi = _mul_interval(g_lo, g_hi, pd.lower.data[i], pd.upper.data[i], bk)
                lo_out.append(lo)
                hi_out.append(hi)
            dv = BoxEntry(TensorValue(shape, tuple(lo_out)), TensorValue(shape, tuple(hi_out)))
        elif isinstance(kind, (Reshape, Flatten)):
            pv, pd = out[node.parents[0]]
            val = BoxEntry(TensorValue(shape, pv.lower.data), TensorValue(shape, pv.upper.data))
            dv = BoxEntry(TensorValue(shape, pd.lower.data), TensorValue(shape, pd.upper.data))
        else:
            raise DerivUnsupported(node.id, kind.name())
        out[node.id] = (val, dv)
    return out
