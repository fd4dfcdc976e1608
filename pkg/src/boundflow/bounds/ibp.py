"""Interval bound propagation: one forward sweep of per-node boxes.

Transfer rules follow the standard sound set: sign-split accumulation for
affine ops (the W = W+ - W- rule written per coefficient), endpoint
application for monotone elementwise ops, four-corner products, and
endpoint sums for reductions.  Softmax gets a conservative monotone rule
clipped to [0, 1]; CROWN treats it via the constant fallback.
"""

from __future__ import annotations

from ..evaluate import softmax_groups
from ..graph import (
    Add,
    Exp,
    Flatten,
    Input,
    Linear,
    MatMul,
    MseLoss,
    MulElem,
    Param,
    ReduceMean,
    ReduceSum,
    Relu,
    Reshape,
    Sigmoid,
    Softmax,
    Sub,
    Tanh,
    WellTypedGraph,
)
from ..shapes import Shape, TensorValue
from .boxes import BoxEntry, REAL_BACKING


class BoundError(RuntimeError):
    def __init__(self, node_id: int, cause: str):
        super().__init__(f"bound propagation failed at node {node_id}: {cause}")
        self.node_id = node_id
        self.cause = cause


def _affine_bounds(weights, lo, hi, bias, n_out, n_in, bk):
    """Interval image of x -> Wx + b with per-coefficient sign routing."""
    out_lo = []
    out_hi = []
    for j in range(n_out):
        acc_lo = bias[j]
        acc_hi = bias[j]
        base = j * n_in
        for i in range(n_in):
            w = weights[base + i]
            if bk.is_neg(w):
                acc_lo = bk.add_lo(acc_lo, bk.mul_lo(w, hi[i]))
                acc_hi = bk.add_hi(acc_hi, bk.mul_hi(w, lo[i]))
            else:
                acc_lo = bk.add_lo(acc_lo, bk.mul_lo(w, lo[i]))
                acc_hi = bk.add_hi(acc_hi, bk.mul_hi(w, hi[i]))
        out_lo.append(acc_lo)
        out_hi.append(acc_hi)
    return out_lo, out_hi


def _mul_interval(l1, h1, l2, h2, bk):
    cand_lo = [bk.mul_lo(l1, l2), bk.mul_lo(l1, h2), bk.mul_lo(h1, l2), bk.mul_lo(h1, h2)]
    cand_hi = [bk.mul_hi(l1, l2), bk.mul_hi(l1, h2), bk.mul_hi(h1, l2), bk.mul_hi(h1, h2)]
    lo = cand_lo[0]
    for c in cand_lo[1:]:
        lo = bk.min(lo, c)
    hi = cand_hi[0]
    for c in cand_hi[1:]:
        hi = bk.max(hi, c)
    return lo, hi


def _square_interval(l, h, bk):
    # dependent product x*x: nonnegative, endpoints by |x|
    zero = bk.zero()
    if not bk.lt(l, zero):  # l >= 0
        return bk.mul_lo(l, l), bk.mul_hi(h, h)
    if bk.le(h, zero):
        return bk.mul_lo(h, h), bk.mul_hi(l, l)
    return zero, bk.max(bk.mul_hi(l, l), bk.mul_hi(h, h))


def ibp_step(kind, parent_boxes: list[BoxEntry], out_shape: Shape, bk, params_by_name) -> BoxEntry:
    """One node's interval transfer rule; total on the supported roster."""
    if isinstance(kind, Linear):
        w_t = params_by_name[kind.weight_key]
        b_t = params_by_name[kind.bias_key]
        x = parent_boxes[0]
        n_in, n_out = kind.in_dim, kind.out_dim
        rows = x.shape.dims[0] if x.shape.rank == 2 else 1
        lo_all: list = []
        hi_all: list = []
        for r in range(rows):
            sl = x.lower.data[r * n_in:(r + 1) * n_in]
            sh = x.upper.data[r * n_in:(r + 1) * n_in]
            lo, hi = _affine_bounds(w_t.data, sl, sh, b_t.data, n_out, n_in, bk)
            lo_all.extend(lo)
            hi_all.extend(hi)
        return BoxEntry(TensorValue(out_shape, tuple(lo_all)), TensorValue(out_shape, tuple(hi_all)))

    if isinstance(kind, MatMul):
        a, b = parent_boxes
        m, n = a.shape.dims
        p = 1 if b.shape.rank == 1 else b.shape.dims[1]
        lo_out = []
        hi_out = []
        for r in range(m):
            for c in range(p):
                acc_lo = None
                acc_hi = None
                for k in range(n):
                    i_a = r * n + k
                    i_b = k * p + c if b.shape.rank == 2 else k
                    lo, hi = _mul_interval(
                        a.lower.data[i_a], a.upper.data[i_a],
                        b.lower.data[i_b], b.upper.data[i_b], bk,
                    )
                    acc_lo = lo if acc_lo is None else bk.add_lo(acc_lo, lo)
                    acc_hi = hi if acc_hi is None else bk.add_hi(acc_hi, hi)
                lo_out.append(acc_lo)
                hi_out.append(acc_hi)
        return BoxEntry(TensorValue(out_shape, tuple(lo_out)), TensorValue(out_shape, tuple(hi_out)))

    if isinstance(kind, Add):
        a, b = parent_boxes
        lo = tuple(bk.add_lo(x, y) for x, y in zip(a.lower.data, b.lower.data))
        hi = tuple(bk.add_hi(x, y) for x, y in zip(a.upper.data, b.upper.data))
        return BoxEntry(TensorValue(out_shape, lo), TensorValue(out_shape, hi))

    if isinstance(kind, Sub):
        a, b = parent_boxes
        lo = tuple(bk.sub_lo(x, y) for x, y in zip(a.lower.data, b.upper.data))
        hi = tuple(bk.sub_hi(x, y) for x, y in zip(a.upper.data, b.lower.data))
        return BoxEntry(TensorValue(out_shape, lo), TensorValue(out_shape, hi))

    if isinstance(kind, MulElem):
        a, b = parent_boxes
        lo_out = []
        hi_out = []
        for i in range(out_shape.size):
            lo, hi = _mul_interval(a.lower.data[i], a.upper.data[i],
                                   b.lower.data[i], b.upper.data[i], bk)
            lo_out.append(lo)
            hi_out.append(hi)
        return BoxEntry(TensorValue(out_shape, tuple(lo_out)), TensorValue(out_shape, tuple(hi_out)))

    if isinstance(kind, Relu):
        x = parent_boxes[0]
        zero = bk.zero()
        lo = tuple(bk.max(v, zero) for v in x.lower.data)
        hi = tuple(bk.max(v, zero) for v in x.upper.data)
        return BoxEntry(TensorValue(out_shape, lo), TensorValue(out_shape, hi))

    if isinstance(kind, (Tanh, Sigmoid, Exp)):
        x = parent_boxes[0]
        if isinstance(kind, Tanh):
            f_lo, f_hi = bk.tanh_lo, bk.tanh_hi
        elif isinstance(kind, Sigmoid):
            f_lo, f_hi = bk.sigmoid_lo, bk.sigmoid_hi
        else:
            f_lo, f_hi = bk.exp_lo, bk.exp_hi
        lo = tuple(f_lo(v) for v in x.lower.data)
        hi = tuple(f_hi(v) for v in x.upper.data)
        return BoxEntry(TensorValue(out_shape, lo), TensorValue(out_shape, hi))

    if isinstance(kind, (ReduceSum, ReduceMean)):
        x = parent_boxes[0]
        acc_lo = x.lower.data[0]
        acc_hi = x.upper.data[0]
        for v in x.lower.data[1:]:
            acc_lo = bk.add_lo(acc_lo, v)
        for v in x.upper.data[1:]:
            acc_hi = bk.add_hi(acc_hi, v)
        if isinstance(kind, ReduceMean):
            count = _count_value(len(x.lower.data), bk)
            acc_lo = bk.div_lo(acc_lo, count)
            acc_hi = bk.div_hi(acc_hi, count)
        return BoxEntry(TensorValue(out_shape, (acc_lo,)), TensorValue(out_shape, (acc_hi,)))

    if isinstance(kind, (Reshape, Flatten)):
        x = parent_boxes[0]
        return BoxEntry(TensorValue(out_shape, x.lower.data), TensorValue(out_shape, x.upper.data))

    if isinstance(kind, MseLoss):
        a, b = parent_boxes
        acc_lo = None
        acc_hi = None
        for i in range(a.shape.size):
            d_lo = bk.sub_lo(a.lower.data[i], b.upper.data[i])
            d_hi = bk.sub_hi(a.upper.data[i], b.lower.data[i])
            sq_lo, sq_hi = _square_interval(d_lo, d_hi, bk)
            acc_lo = sq_lo if acc_lo is None else bk.add_lo(acc_lo, sq_lo)
            acc_hi = sq_hi if acc_hi is None else bk.add_hi(acc_hi, sq_hi)
        count = _count_value(a.shape.size, bk)
        return BoxEntry(
            TensorValue(out_shape, (bk.div_lo(acc_lo, count),)),
            TensorValue(out_shape, (bk.div_hi(acc_hi, count),)),
        )

    if isinstance(kind, Softmax):
        x = parent_boxes[0]
        lo_out = list(x.lower.data)
        hi_out = list(x.upper.data)
        one = _count_value(1, bk)
        zero = bk.zero()
        for group in softmax_groups(x.shape, kind.axis):
            e_lo = {i: bk.exp_lo(x.lower.data[i]) for i in group}
            e_hi = {i: bk.exp_hi(x.upper.data[i]) for i in group}
            for i in group:
                # lower: own exp at its low end vs. the others at their high end
                den_hi = e_lo[i]
                for j in group:
                    if j != i:
                        den_hi = bk.add_hi(den_hi, e_hi[j])
                lo = bk.div_lo(e_lo[i], den_hi)
                # upper: own exp high, others low
                den_lo = e_hi[i]
                for j in group:
                    if j != i:
                        den_lo = bk.add_lo(den_lo, e_lo[j])
                hi = bk.div_hi(e_hi[i], den_lo)
                lo_out[i] = bk.max(zero, bk.min(lo, one))
                hi_out[i] = bk.min(one, bk.max(hi, zero))
        return BoxEntry(TensorValue(out_shape, tuple(lo_out)), TensorValue(out_shape, tuple(hi_out)))

    raise BoundError(-1, f"no interval transfer rule for {kind!r}")


def _count_value(n: int, bk):
    if bk.name == "real":
        return float(n)
    from .. import ieee32

    return ieee32.from_real(float(n))


def run_ibp(
    g: WellTypedGraph,
    params_by_name: dict[str, TensorValue],
    input_boxes: dict[int, BoxEntry],
    backing=REAL_BACKING,
) -> dict[int, BoxEntry]:
    """Forward sweep in id order; returns a box for every node."""
    boxes: dict[int, BoxEntry] = {}
    for node in g.nodes:
        try:
            if isinstance(node.kind, Input):
                entry = input_boxes[node.id]
                if entry.shape != node.out_shape:
                    raise BoundError(node.id, f"input box shape {entry.shape} != {node.out_shape}")
                boxes[node.id] = entry
            elif isinstance(node.kind, Param):
                t = params_by_name[node.kind.key]
                boxes[node.id] = BoxEntry.point(t)
            else:
                parents = [boxes[p] for p in node.parents]
                boxes[node.id] = ibp_step(node.kind, parents, node.out_shape, backing, params_by_name)
        except BoundError:
            raise
        except (ArithmeticError, KeyError, ValueError) as exc:
            raise BoundError(node.id, str(exc)) from exc
    return boxes
