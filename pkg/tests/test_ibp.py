import itertools

import numpy as np
import pytest

from boundflow import GraphBuilder, ParamStore, Shape, TensorValue, validate_graph
from boundflow import ieee32 as i32
from boundflow.bounds import (
    B32_BACKING,
    REAL_BACKING,
    BoundError,
    BoxEntry,
    box_contains,
    ibp_step,
    run_ibp,
)
from boundflow.evaluate import Context, eval_graph
from boundflow.graph import Linear, MseLoss, Relu, Reshape, Softmax
from boundflow.ieee32 import IEEE32Domain

from conftest import numpy_forward_batch, random_context, random_graph


def _entry(lo, hi, shape=None):
    shape = shape or Shape.vector(len(lo))
    return BoxEntry(TensorValue(shape, tuple(lo)), TensorValue(shape, tuple(hi)))


def test_linear_step_matches_corner_enumeration():
    # W = [[1, -2]], b = [0.5], x in [0,1]^2 -> y in [-1.5, 1.5]
    store = ParamStore(
        [
            ("w", TensorValue(Shape.matrix(1, 2), (1.0, -2.0))),
            ("b", TensorValue(Shape.vector(1), (0.5,))),
        ]
    )
    out = ibp_step(Linear(2, 1, "w", "b"), [_entry((0.0, 0.0), (1.0, 1.0))],
                   Shape.vector(1), REAL_BACKING, dict(store.items()))
    corners = [1.0 * a + -2.0 * b + 0.5 for a, b in itertools.product((0.0, 1.0), repeat=2)]
    assert out.lower.data[0] == min(corners) == -1.5
    assert out.upper.data[0] == max(corners) == 1.5


def test_relu_step_endpoints():
    out = ibp_step(Relu(), [_entry((-1.0,), (1.0,))], Shape.vector(1), REAL_BACKING, {})
    assert out.lower.data == (0.0,) and out.upper.data == (1.0,)


def test_reshape_step_identity():
    e = _entry((1.0, 2.0), (3.0, 4.0))
    out = ibp_step(Reshape(Shape.matrix(2, 1)), [e], Shape.matrix(2, 1), REAL_BACKING, {})
    assert out.lower.data == e.lower.data and out.upper.data == e.upper.data


def test_run_ibp_single_relu():
    b = GraphBuilder()
    x = b.input(Shape.vector(1))
    r = b.unary(Relu(), x)
    g = validate_graph(b.build(r), ParamStore())
    boxes = run_ibp(g, {}, {x: _entry((-1.0,), (1.0,))}, REAL_BACKING)
    assert boxes[x].lower.data == (-1.0,) and boxes[x].upper.data == (1.0,)
    assert boxes[r].lower.data == (0.0,) and boxes[r].upper.data == (1.0,)


def test_run_ibp_point_box_contains_trace(rng):
    for _ in range(15):
        g, store, x = random_graph(rng, max_depth=5, max_width=5)
        point = rng.uniform(-1, 1, g.node(x).out_shape.size)
        entry = _entry(tuple(point.tolist()), tuple(point.tolist()), g.node(x).out_shape)
        boxes = run_ibp(g, dict(store.items()), {x: entry}, REAL_BACKING)
        ctx = Context(
            inputs=(TensorValue(g.node(x).out_shape, tuple(point.tolist())),),
            params=store.values(),
        )
        from boundflow.scalars import RealRef

        values = eval_graph(g, ctx, RealRef)
        for node in g.nodes:
            assert box_contains(boxes[node.id], values[node.id], REAL_BACKING, tol=1e-9)


def test_run_ibp_mlp_sampled_soundness(rng):
    for _ in range(30):
        g, store, x = random_graph(rng, max_depth=5, max_width=5)
        size = g.node(x).out_shape.size
        lo = rng.uniform(-1, 0, size)
        hi = lo + rng.uniform(0, 1, size)
        entry = _entry(tuple(lo.tolist()), tuple(hi.tolist()), g.node(x).out_shape)
        boxes = run_ibp(g, dict(store.items()), {x: entry}, REAL_BACKING)
        xs = rng.uniform(lo, hi, (100, size))
        oracle = numpy_forward_batch(g, store, xs)
        for node in g.nodes:
            vals = oracle[node.id]
            blo = np.array(boxes[node.id].lower.data)
            bhi = np.array(boxes[node.id].upper.data)
            assert (vals >= blo - 1e-9).all() and (vals <= bhi + 1e-9).all(), node


def test_run_ibp_b32_backing_exact_containment(rng):
    ops = ("linear", "relu", "tanh", "sigmoid", "add", "sub", "mul_elem")
    for _ in range(10):
        g, store_f, x = random_graph(rng, max_depth=4, max_width=4, ops=ops)
        # params on the binary32 grid, as patterns
        store_b = store_f.replace_values(
            [
                TensorValue(t.shape, tuple(i32.to_real(i32.from_real(v)) for v in t.data))
                for t in store_f.values()
            ]
        )
        patterns = {
            name: TensorValue(t.shape, tuple(i32.from_real(v) for v in t.data))
            for name, t in store_b.items()
        }
        size = g.node(x).out_shape.size
        lo = [i32.from_real(v) for v in rng.uniform(-1, 0, size)]
        hi = [i32.from_real(v, ) for v in rng.uniform(0.1, 1, size)]
        entry = BoxEntry(
            TensorValue(g.node(x).out_shape, tuple(lo)),
            TensorValue(g.node(x).out_shape, tuple(hi)),
        )
        boxes = run_ibp(g, patterns, {x: entry}, B32_BACKING)
        for _ in range(25):
            sample = [
                i32.from_real(rng.uniform(i32.to_real(a), i32.to_real(b)))
                for a, b in zip(lo, hi)
            ]
            ctx = Context(
                inputs=(TensorValue(g.node(x).out_shape, tuple(sample)),),
                params=tuple(patterns[n] for n in g.param_names),
            )
            values = eval_graph(g, ctx, IEEE32Domain)
            for node in g.nodes:
                entry_box = boxes[node.id]
                for lo_v, hi_v, v in zip(entry_box.lower.data, entry_box.upper.data,
                                         values[node.id].data):
                    assert i32.to_real(lo_v) <= i32.to_real(v) <= i32.to_real(hi_v), node


def test_monotone_tightening_nested_boxes(rng):
    for _ in range(10):
        g, store, x = random_graph(rng, max_depth=4, max_width=4)
        size = g.node(x).out_shape.size
        lo = rng.uniform(-1, 0, size)
        hi = lo + rng.uniform(0.5, 1, size)
        mid_lo = lo + 0.2 * (hi - lo)
        mid_hi = hi - 0.2 * (hi - lo)
        outer = run_ibp(g, dict(store.items()),
                        {x: _entry(tuple(lo), tuple(hi), g.node(x).out_shape)}, REAL_BACKING)
        inner = run_ibp(g, dict(store.items()),
                        {x: _entry(tuple(mid_lo), tuple(mid_hi), g.node(x).out_shape)}, REAL_BACKING)
        for node in g.nodes:
            o_lo = np.array(outer[node.id].lower.data)
            o_hi = np.array(outer[node.id].upper.data)
            i_lo = np.array(inner[node.id].lower.data)
            i_hi = np.array(inner[node.id].upper.data)
            assert (i_lo >= o_lo - 1e-12).all() and (i_hi <= o_hi + 1e-12).all()


def test_softmax_ibp_clipped_and_sound(rng):
    b = GraphBuilder()
    x = b.input(Shape.vector(3))
    s = b.unary(Softmax(axis=0), x)
    g = validate_graph(b.build(s), ParamStore())
    entry = _entry((-1.0, 0.0, 0.5), (1.0, 0.5, 2.0))
    boxes = run_ibp(g, {}, {x: entry}, REAL_BACKING)
    lo = np.array(boxes[s].lower.data)
    hi = np.array(boxes[s].upper.data)
    assert (lo >= 0.0).all() and (hi <= 1.0).all()
    store = ParamStore()
    xs = rng.uniform([-1, 0, 0.5], [1, 0.5, 2], (300, 3))
    vals = numpy_forward_batch(g, store, xs)[s]
    assert (vals >= lo - 1e-9).all() and (vals <= hi + 1e-9).all()


def test_mse_ibp_sound(rng):
    b = GraphBuilder()
    x = b.input(Shape.vector(2))
    t = b.param("target", Shape.vector(2))
    loss = b.binary(MseLoss(), x, t)
    store = ParamStore([("target", TensorValue(Shape.vector(2), (0.5, -0.5)))])
    g = validate_graph(b.build(loss), store)
    entry = _entry((-1.0, -1.0), (1.0, 1.0))
    boxes = run_ibp(g, dict(store.items()), {x: entry}, REAL_BACKING)
    lo, hi = boxes[loss].lower.data[0], boxes[loss].upper.data[0]
    assert lo >= 0.0
    for _ in range(300):
        xv = rng.uniform(-1, 1, 2)
        val = (((xv - np.array([0.5, -0.5])) ** 2).mean())
        assert lo - 1e-9 <= val <= hi + 1e-9


def test_unsupported_backing_error():
    b = GraphBuilder()
    x = b.input(Shape.vector(1))
    r = b.unary(Relu(), x)
    g = validate_graph(b.build(r), ParamStore())
    with pytest.raises(BoundError) as exc:
        run_ibp(g, {}, {}, REAL_BACKING)  # missing input box
    assert exc.value.node_id == x
