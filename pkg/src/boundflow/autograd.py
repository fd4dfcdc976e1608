"""Forward-mode JVP and reverse-mode VJP on the graph IR.

Both passes reuse the forward trace and run domain-generically; the
calculus claims (adjointness, agreement with finite differences) are
stated over the reference domain and enforced by the test suite.  The
backward convention at ReLU's kink is gradient 0 at exactly-zero
pre-activations.
"""

from __future__ import annotations

from .evaluate import Context, eval_graph, softmax_groups
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


def _zeros_like(shape: Shape, dom) -> TensorValue:
    return TensorValue(shape, (dom.zero(),) * shape.size)


def _ew(dom_fn, a: TensorValue, b: TensorValue) -> TensorValue:
    return TensorValue(a.shape, tuple(dom_fn(x, y) for x, y in zip(a.data, b.data)))


def _relu_mask(pre: TensorValue, t: TensorValue, dom) -> TensorValue:
    zero = dom.zero()
    return TensorValue(
        t.shape,
        tuple(d if dom.lt(zero, p) else zero for p, d in zip(pre.data, t.data)),
    )


def _tanh_scale(val: TensorValue, t: TensorValue, dom) -> TensorValue:
    one = dom.one()
    return TensorValue(
        t.shape,
        tuple(dom.mul(dom.sub(one, dom.mul(v, v)), d) for v, d in zip(val.data, t.data)),
    )


def _sigmoid_scale(val: TensorValue, t: TensorValue, dom) -> TensorValue:
    one = dom.one()
    return TensorValue(
        t.shape,
        tuple(dom.mul(dom.mul(v, dom.sub(one, v)), d) for v, d in zip(val.data, t.data)),
    )


def _softmax_jac(s: TensorValue, t: TensorValue, axis: int, dom) -> TensorValue:
    # D softmax(x)[dx] = s (.) (dx - <s, dx> 1); the Jacobian is symmetric,
    # so the same formula serves JVP and VJP.
    out = list(t.data)
    for group in softmax_groups(s.shape, axis):
        inner = None
        for i in group:
            term = dom.mul(s.data[i], t.data[i])
            inner = term if inner is None else dom.add(inner, term)
        for i in group:
            out[i] = dom.mul(s.data[i], dom.sub(t.data[i], inner))
    return TensorValue(t.shape, tuple(out))


def jvp(g: WellTypedGraph, ctx: Context, tangent: Context, dom=None) -> TensorValue:
    """Push a tangent context through the graph; returns the output tangent."""
    from .scalars import RealRef

    dom = dom or RealRef
    tangent.check_against(g)
    values = eval_graph(g, ctx, dom)
    params = dict(zip(g.param_names, ctx.params))
    tangent_params = dict(zip(g.param_names, tangent.params))
    input_index = {node_id: k for k, node_id in enumerate(g.input_ids)}

    dv: dict[int, TensorValue] = {}
    for node in g.nodes:
        kind = node.kind
        if isinstance(kind, Input):
            dv[node.id] = tangent.inputs[input_index[node.id]]
        elif isinstance(kind, Param):
            dv[node.id] = tangent_params[kind.key]
        elif isinstance(kind, Linear):
            x = values[node.parents[0]]
            dx = dv[node.parents[0]]
            w, dw = params[kind.weight_key].data, tangent_params[kind.weight_key].data
            db = tangent_params[kind.bias_key].data
            n_in, n_out = kind.in_dim, kind.out_dim
            rows = x.shape.dims[0] if x.shape.rank == 2 else 1
            out = []
            for r in range(rows):
                xo = r * n_in
                for j in range(n_out):
                    acc = db[j]
                    base = j * n_in
                    for i in range(n_in):
                        acc = dom.add(acc, dom.mul(w[base + i], dx.data[xo + i]))
                        acc = dom.add(acc, dom.mul(dw[base + i], x.data[xo + i]))
                    out.append(acc)
            dv[node.id] = TensorValue(node.out_shape, tuple(out))
        elif isinstance(kind, MatMul):
            a, b = values[node.parents[0]], values[node.parents[1]]
            da, db_ = dv[node.parents[0]], dv[node.parents[1]]
            m, n = a.shape.dims
            p = 1 if b.shape.rank == 1 else b.shape.dims[1]
            out = []
            for r in range(m):
                for c in range(p):
                    acc = None
                    for k in range(n):
                        bk = b.data[k * p + c] if b.shape.rank == 2 else b.data[k]
                        dbk = db_.data[k * p + c] if b.shape.rank == 2 else db_.data[k]
                        term = dom.add(
                            dom.mul(da.data[r * n + k], bk),
                            dom.mul(a.data[r * n + k], dbk),
                        )
                        acc = term if acc is None else dom.add(acc, term)
                    out.append(acc)
            dv[node.id] = TensorValue(node.out_shape, tuple(out))
        elif isinstance(kind, Add):
            dv[node.id] = _ew(dom.add, dv[node.parents[0]], dv[node.parents[1]])
        elif isinstance(kind, Sub):
            dv[node.id] = _ew(dom.sub, dv[node.parents[0]], dv[node.parents[1]])
        elif isinstance(kind, MulElem):
            a, b = values[node.parents[0]], values[node.parents[1]]
            da, db_ = dv[node.parents[0]], dv[node.parents[1]]
            dv[node.id] = TensorValue(
                node.out_shape,
                tuple(
                    dom.add(dom.mul(da.data[i], b.data[i]), dom.mul(a.data[i], db_.data[i]))
                    for i in range(len(a.data))
                ),
            )
        elif isinstance(kind, Relu):
            dv[node.id] = _relu_mask(values[node.parents[0]], dv[node.parents[0]], dom)
        elif isinstance(kind, Tanh):
            dv[node.id] = _tanh_scale(values[node.id], dv[node.parents[0]], dom)
        elif isinstance(kind, Sigmoid):
            dv[node.id] = _sigmoid_scale(values[node.id], dv[node.parents[0]], dom)
        elif isinstance(kind, Exp):
            dv[node.id] = _ew(dom.mul, values[node.id], dv[node.parents[0]])
        elif isinstance(kind, (ReduceSum, ReduceMean)):
            d = dv[node.parents[0]]
            acc = d.data[0]
            for x in d.data[1:]:
                acc = dom.add(acc, x)
            if isinstance(kind, ReduceMean):
                acc = dom.div(acc, dom.from_float(float(len(d.data))))
            dv[node.id] = TensorValue(node.out_shape, (acc,))
        elif isinstance(kind, (Reshape, Flatten)):
            dv[node.id] = TensorValue(node.out_shape, dv[node.parents[0]].data)
        elif isinstance(kind, MseLoss):
            a, b = values[node.parents[0]], values[node.parents[1]]
            da, db_ = dv[node.parents[0]], dv[node.parents[1]]
            n = len(a.data)
            acc = None
            for i in range(n):
                term = dom.mul(dom.sub(a.data[i], b.data[i]), dom.sub(da.data[i], db_.data[i]))
                acc = term if acc is None else dom.add(acc, term)
            two_over_n = dom.div(dom.from_float(2.0), dom.from_float(float(n)))
            dv[node.id] = TensorValue(node.out_shape, (dom.mul(two_over_n, acc),))
        elif isinstance(kind, Softmax):
            dv[node.id] = _softmax_jac(values[node.id], dv[node.parents[0]], kind.axis, dom)
        else:
            raise NotImplementedError(f"jvp rule for {kind!r}")
    return dv[g.output_id]


def vjp(g: WellTypedGraph, ctx: Context, seed: TensorValue, dom=None) -> Context:
    """Pull a cotangent seed back; returns cotangents for inputs and params."""
    from .scalars import RealRef

    dom = dom or RealRef
    if seed.shape != g.output_shape:
        raise ValueError(f"seed shape {seed.shape} != output shape {g.output_shape}")
    values = eval_graph(g, ctx, dom)
    params = dict(zip(g.param_names, ctx.params))

    bar: dict[int, TensorValue] = {
        node.id: _zeros_like(node.out_shape, dom) for node in g.nodes
    }
    bar[g.output_id] = seed
    param_bar: dict[str, TensorValue] = {
        name: _zeros_like(t.shape, dom) for name, t in zip(g.param_names, ctx.params)
    }

    def acc_node(node_id: int, extra: TensorValue) -> None:
        bar[node_id] = _ew(dom.add, bar[node_id], extra)

    def acc_param(name: str, extra: TensorValue) -> None:
        param_bar[name] = _ew(dom.add, param_bar[name], extra)

    for node in reversed(g.nodes):
        kind = node.kind
        ybar = bar[node.id]
        if isinstance(kind, Input):
            continue
        if isinstance(kind, Param):
            acc_param(kind.key, ybar)
            continue
        if isinstance(kind, Linear):
            x = values[node.parents[0]]
            w = params[kind.weight_key].data
            n_in, n_out = kind.in_dim, kind.out_dim
            rows = x.shape.dims[0] if x.shape.rank == 2 else 1
            xbar = [dom.zero()] * (rows * n_in)
            wbar = [dom.zero()] * (n_out * n_in)
            bbar = [dom.zero()] * n_out
            for r in range(rows):
                xo = r * n_in
                yo = r * n_out
                for j in range(n_out):
                    yb = ybar.data[yo + j]
                    base = j * n_in
                    bbar[j] = dom.add(bbar[j], yb)
                    for i in range(n_in):
                        xbar[xo + i] = dom.add(xbar[xo + i], dom.mul(w[base + i], yb))
                        wbar[base + i] = dom.add(wbar[base + i], dom.mul(yb, x.data[xo + i]))
            acc_node(node.parents[0], TensorValue(x.shape, tuple(xbar)))
            acc_param(kind.weight_key, TensorValue(Shape.matrix(n_out, n_in), tuple(wbar)))
            acc_param(kind.bias_key, TensorValue(Shape.vector(n_out), tuple(bbar)))
        elif isinstance(kind, MatMul):
            a, b = values[node.parents[0]], values[node.parents[1]]
            m, n = a.shape.dims
            p = 1 if b.shape.rank == 1 else b.shape.dims[1]
            abar = [dom.zero()] * (m * n)
            bbar = [dom.zero()] * (n * p)
            for r in range(m):
                for c in range(p):
                    yb = ybar.data[r * p + c]
                    for k in range(n):
                        bk = b.data[k * p + c] if b.shape.rank == 2 else b.data[k]
                        abar[r * n + k] = dom.add(abar[r * n + k], dom.mul(yb, bk))
                        bbar[k * p + c] = dom.add(bbar[k * p + c], dom.mul(a.data[r * n + k], yb))
            acc_node(node.parents[0], TensorValue(a.shape, tuple(abar)))
            acc_node(node.parents[1], TensorValue(b.shape, tuple(bbar)))
        elif isinstance(kind, Add):
            acc_node(node.parents[0], ybar)
            acc_node(node.parents[1], ybar)
        elif isinstance(kind, Sub):
            acc_node(node.parents[0], ybar)
            acc_node(node.parents[1], TensorValue(ybar.shape, tuple(dom.neg(x) for x in ybar.data)))
        elif isinstance(kind, MulElem):
            a, b = values[node.parents[0]], values[node.parents[1]]
            acc_node(node.parents[0], _ew(dom.mul, ybar, b))
            acc_node(node.parents[1], _ew(dom.mul, ybar, a))
        elif isinstance(kind, Relu):
            acc_node(node.parents[0], _relu_mask(values[node.parents[0]], ybar, dom))
        elif isinstance(kind, Tanh):
            acc_node(node.parents[0], _tanh_scale(values[node.id], ybar, dom))
        elif isinstance(kind, Sigmoid):
            acc_node(node.parents[0], _sigmoid_scale(values[node.id], ybar, dom))
        elif isinstance(kind, Exp):
            acc_node(node.parents[0], _ew(dom.mul, values[node.id], ybar))
        elif isinstance(kind, (ReduceSum, ReduceMean)):
            parent = g.node(node.parents[0])
            n = parent.out_shape.size
            s = ybar.data[0]
            if isinstance(kind, ReduceMean):
                s = dom.div(s, dom.from_float(float(n)))
            acc_node(node.parents[0], TensorValue(parent.out_shape, (s,) * n))
        elif isinstance(kind, (Reshape, Flatten)):
            parent = g.node(node.parents[0])
            acc_node(node.parents[0], TensorValue(parent.out_shape, ybar.data))
        elif isinstance(kind, MseLoss):
            a, b = values[node.parents[0]], values[node.parents[1]]
            n = len(a.data)
            scale = dom.mul(ybar.data[0], dom.div(dom.from_float(2.0), dom.from_float(float(n))))
            diff = tuple(dom.mul(scale, dom.sub(x, y)) for x, y in zip(a.data, b.data))
            acc_node(node.parents[0], TensorValue(a.shape, diff))
            acc_node(node.parents[1], TensorValue(b.shape, tuple(dom.neg(x) for x in diff)))
        elif isinstance(kind, Softmax):
            acc_node(node.parents[0], _softmax_jac(values[node.id], ybar, kind.axis, dom))
        else:
            raise NotImplementedError(f"vjp rule for {kind!r}")

    input_cotangents = tuple(bar[i] for i in g.input_ids)
    param_cotangents = tuple(param_bar[name] for name in g.param_names)
    return Context(inputs=input_cotangents, params=param_cotangents)


def context_dot(a: Context, b: Context) -> float:
    """Dot product on contexts: sum of tensorwise dots over inputs and params."""
    from .shapes import dot

    total = 0.0
    for x, y in zip(a.inputs, b.inputs):
        total += dot(x, y)
    for x, y in zip(a.params, b.params):
        total += dot(x, y)
    return total
