"""Forward evaluation of well-typed graphs over any scalar domain.

One generic sweep in ascending node id covers every domain (reference
reals, rounded binary32, bit-level patterns, intervals): the domain object
supplies the scalar arithmetic, the graph supplies the structure.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import (
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
from .shapes import Shape, TensorValue


class EvalError(RuntimeError):
    def __init__(self, node_id: int, cause: str):
        super().__init__(f"evaluation failed at node {node_id}: {cause}")
        self.node_id = node_id
        self.cause = cause


@dataclass(frozen=True)
class Context:
    """Typed input context: one tensor per graph input, one per store entry."""

    inputs: tuple[TensorValue, ...]
    params: tuple[TensorValue, ...]

    def check_against(self, g: WellTypedGraph) -> None:
        if len(self.inputs) != len(g.input_ids):
            raise ValueError(f"context has {len(self.inputs)} inputs, graph wants {len(g.input_ids)}")
        for t, i in zip(self.inputs, g.input_ids):
            if t.shape != g.node(i).out_shape:
                raise ValueError(f"input for node {i}: shape {t.shape} != {g.node(i).out_shape}")
        if len(self.params) != len(g.param_names):
            raise ValueError(f"context has {len(self.params)} params, graph wants {len(g.param_names)}")
        for t, s, n in zip(self.params, g.param_shapes, g.param_names):
            if t.shape != s:
                raise ValueError(f"param {n!r}: shape {t.shape} != {s}")


def softmax_groups(shape: Shape, axis: int):
    """Yield index groups along one axis of a row-major layout."""
    dims = shape.dims
    length = dims[axis]
    outer = 1
    for d in dims[:axis]:
        outer *= d
    inner = 1
    for d in dims[axis + 1:]:
        inner *= d
    for o in range(outer):
        for i in range(inner):
            yield [(o * length + l) * inner + i for l in range(length)]


def _linear_rows(x: TensorValue, in_dim: int):
    """Row views of a [in] or [B,in] tensor."""
    if x.shape.rank == 1:
        return [x.data]
    b = x.shape.dims[0]
    return [x.data[r * in_dim:(r + 1) * in_dim] for r in range(b)]


def apply_op(kind, parent_values, out_shape: Shape, dom, params_by_name) -> TensorValue:
    """One node-level step of the forward semantics (shared with the checker)."""
    add, sub, mul = dom.add, dom.sub, dom.mul

    if isinstance(kind, Linear):
        w = params_by_name[kind.weight_key].data
        bv = params_by_name[kind.bias_key].data
        n_in, n_out = kind.in_dim, kind.out_dim
        out = []
        for row in _linear_rows(parent_values[0], n_in):
            for j in range(n_out):
                acc = bv[j]
                base = j * n_in
                for i in range(n_in):
                    acc = add(acc, mul(w[base + i], row[i]))
                out.append(acc)
        return TensorValue(out_shape, tuple(out))

    if isinstance(kind, MatMul):
        a, b = parent_values
        m, n = a.shape.dims
        p = 1 if b.shape.rank == 1 else b.shape.dims[1]
        out = []
        for r in range(m):
            for c in range(p):
                acc = None
                for k in range(n):
                    bkc = b.data[k * p + c] if b.shape.rank == 2 else b.data[k]
                    term = mul(a.data[r * n + k], bkc)
                    acc = term if acc is None else add(acc, term)
                out.append(acc)
        return TensorValue(out_shape, tuple(out))

    if isinstance(kind, Add):
        a, b = parent_values
        return TensorValue(out_shape, tuple(add(x, y) for x, y in zip(a.data, b.data)))
    if isinstance(kind, Sub):
        a, b = parent_values
        return TensorValue(out_shape, tuple(sub(x, y) for x, y in zip(a.data, b.data)))
    if isinstance(kind, MulElem):
        a, b = parent_values
        return TensorValue(out_shape, tuple(mul(x, y) for x, y in zip(a.data, b.data)))

    if isinstance(kind, Relu):
        zero = dom.zero()
        return TensorValue(out_shape, tuple(dom.max(x, zero) for x in parent_values[0].data))
    if isinstance(kind, Tanh):
        return TensorValue(out_shape, tuple(dom.tanh(x) for x in parent_values[0].data))
    if isinstance(kind, Sigmoid):
        return TensorValue(out_shape, tuple(dom.sigmoid(x) for x in parent_values[0].data))
    if isinstance(kind, Exp):
        return TensorValue(out_shape, tuple(dom.exp(x) for x in parent_values[0].data))

    if isinstance(kind, (ReduceSum, ReduceMean)):
        data = parent_values[0].data
        acc = data[0]
        for x in data[1:]:
            acc = add(acc, x)
        if isinstance(kind, ReduceMean):
            acc = dom.div(acc, dom.from_float(float(len(data))))
        return TensorValue(out_shape, (acc,))

    if isinstance(kind, (Reshape, Flatten)):
        return TensorValue(out_shape, parent_values[0].data)

    if isinstance(kind, MseLoss):
        a, b = parent_values
        n = len(a.data)
        acc = None
        for x, y in zip(a.data, b.data):
            d = sub(x, y)
            sq = mul(d, d)
            acc = sq if acc is None else add(acc, sq)
        acc = dom.div(acc, dom.from_float(float(n)))
        return TensorValue(out_shape, (acc,))

    if isinstance(kind, Softmax):
        x = parent_values[0]
        out = list(x.data)
        for group in softmax_groups(x.shape, kind.axis):
            m = x.data[group[0]]
            for i in group[1:]:
                m = dom.max(m, x.data[i])
            exps = [dom.exp(sub(x.data[i], m)) for i in group]
            total = exps[0]
            for e in exps[1:]:
                total = add(total, e)
            for i, e in zip(group, exps):
                out[i] = dom.div(e, total)
        return TensorValue(out_shape, tuple(out))

    raise EvalError(-1, f"unsupported op kind {kind!r}")


def eval_graph(g: WellTypedGraph, ctx: Context, dom) -> dict[int, TensorValue]:
    """Forward trace: node id -> value, computed in ascending id order."""
    ctx.check_against(g)
    params_by_name = dict(zip(g.param_names, ctx.params))
    input_index = {node_id: k for k, node_id in enumerate(g.input_ids)}
    values: dict[int, TensorValue] = {}
    for node in g.nodes:
        try:
            if isinstance(node.kind, Input):
                values[node.id] = ctx.inputs[input_index[node.id]]
            elif isinstance(node.kind, Param):
                values[node.id] = params_by_name[node.kind.key]
            else:
                parents = [values[p] for p in node.parents]
                values[node.id] = apply_op(node.kind, parents, node.out_shape, dom, params_by_name)
        except ArithmeticError as exc:
            raise EvalError(node.id, str(exc)) from exc
    return values


def eval_output(g: WellTypedGraph, ctx: Context, dom) -> TensorValue:
    return eval_graph(g, ctx, dom)[g.output_id]
