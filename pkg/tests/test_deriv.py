import math

import numpy as np
import pytest

from boundflow import GraphBuilder, ParamStore, Shape, TensorValue, validate_graph
from boundflow.bounds import BoxEntry, deriv_ibp1
from boundflow.bounds.deriv import DerivUnsupported
from boundflow.graph import Add, MulElem, Relu, Reshape, Sigmoid, Sub, Tanh


def _scalar_entry(lo, hi):
    return BoxEntry(TensorValue(Shape.scalar(), (lo,)), TensorValue(Shape.scalar(), (hi,)))


def test_requires_single_scalar_input():
    b = GraphBuilder()
    x = b.input(Shape.vector(2))
    t = b.unary(Tanh(), x)
    g = validate_graph(b.build(t), ParamStore())
    entry = BoxEntry(TensorValue(Shape.vector(2), (0.0, 0.0)), TensorValue(Shape.vector(2), (1.0, 1.0)))
    with pytest.raises(ValueError):
        deriv_ibp1(g, {}, entry)


def test_constant_slope_two_x():
    # y = 2x via mul_elem with a constant side: derivative box [2, 2]
    b = GraphBuilder()
    x = b.input(Shape.scalar())
    two = b.param("two", Shape.scalar())
    y = b.binary(MulElem(), x, two)
    store = ParamStore([("two", TensorValue(Shape.scalar(), (2.0,)))])
    g = validate_graph(b.build(y), store)
    out = deriv_ibp1(g, dict(store.items()), _scalar_entry(-1.0, 1.0))
    _, dv = out[y]
    assert dv.lower.data == (2.0,) and dv.upper.data == (2.0,)


def test_linear_layer_derivative_via_reshape():
    # scalar -> [1] -> linear(w=3) -> derivative [3, 3]
    b = GraphBuilder()
    x = b.input(Shape.scalar())
    v = b.add_node(Reshape(Shape.vector(1)), (x,))
    y = b.linear(v, 1, 1, "w", "b")
    store = ParamStore(
        [
            ("w", TensorValue(Shape.matrix(1, 1), (3.0,))),
            ("b", TensorValue(Shape.vector(1), (-0.5,))),
        ]
    )
    g = validate_graph(b.build(y), store)
    out = deriv_ibp1(g, dict(store.items()), _scalar_entry(-1.0, 1.0))
    _, dv = out[y]
    assert dv.lower.data == (3.0,) and dv.upper.data == (3.0,)


def test_tanh_point_zero():
    b = GraphBuilder()
    x = b.input(Shape.scalar())
    t = b.unary(Tanh(), x)
    g = validate_graph(b.build(t), ParamStore())
    out = deriv_ibp1(g, {}, _scalar_entry(0.0, 0.0))
    val, dv = out[t]
    assert val.lower.data[0] == 0.0 and val.upper.data[0] == 0.0
    assert dv.lower.data[0] == pytest.approx(1.0) and dv.upper.data[0] == pytest.approx(1.0)


def test_tanh_of_scaled_input_sampled(rng):
    # y = tanh(2x) on x in [-0.3, 0.3]: derivative 2(1 - tanh(2x)^2)
    b = GraphBuilder()
    x = b.input(Shape.scalar())
    two = b.param("two", Shape.scalar())
    z = b.binary(MulElem(), x, two)
    t = b.unary(Tanh(), z)
    store = ParamStore([("two", TensorValue(Shape.scalar(), (2.0,)))])
    g = validate_graph(b.build(t), store)
    out = deriv_ibp1(g, dict(store.items()), _scalar_entry(-0.3, 0.3))
    _, dv = out[t]
    lo, hi = dv.lower.data[0], dv.upper.data[0]
    for xv in rng.uniform(-0.3, 0.3, 1000):
        true = 2.0 * (1.0 - math.tanh(2.0 * xv) ** 2)
        assert lo - 1e-9 <= true <= hi + 1e-9


def test_sigmoid_derivative_sound(rng):
    b = GraphBuilder()
    x = b.input(Shape.scalar())
    s = b.unary(Sigmoid(), x)
    g = validate_graph(b.build(s), ParamStore())
    out = deriv_ibp1(g, {}, _scalar_entry(0.5, 1.5))
    _, dv = out[s]
    lo, hi = dv.lower.data[0], dv.upper.data[0]
    for xv in rng.uniform(0.5, 1.5, 500):
        sg = 1.0 / (1.0 + math.exp(-xv))
        true = sg * (1.0 - sg)
        assert lo - 1e-9 <= true <= hi + 1e-9


def test_product_and_difference_rules(rng):
    # y = x * x: derivative 2x over [0.5, 1]
    b = GraphBuilder()
    x = b.input(Shape.scalar())
    y = b.binary(MulElem(), x, x)
    g = validate_graph(b.build(y), ParamStore())
    out = deriv_ibp1(g, {}, _scalar_entry(0.5, 1.0))
    _, dv = out[y]
    lo, hi = dv.lower.data[0], dv.upper.data[0]
    assert lo <= 1.0 and hi >= 2.0
    for xv in rng.uniform(0.5, 1.0, 200):
        assert lo - 1e-9 <= 2 * xv <= hi + 1e-9

    bb = GraphBuilder()
    xx = bb.input(Shape.scalar())
    t = bb.unary(Tanh(), xx)
    s = bb.binary(Sub(), xx, t)
    g2 = validate_graph(bb.build(s), ParamStore())
    out2 = deriv_ibp1(g2, {}, _scalar_entry(-0.5, 0.5))
    _, dv2 = out2[s]
    for xv in rng.uniform(-0.5, 0.5, 200):
        true = 1.0 - (1.0 - math.tanh(xv) ** 2)
        assert dv2.lower.data[0] - 1e-9 <= true <= dv2.upper.data[0] + 1e-9


def test_relu_unsupported():
    b = GraphBuilder()
    x = b.input(Shape.scalar())
    r = b.unary(Relu(), x)
    g = validate_graph(b.build(r), ParamStore())
    with pytest.raises(DerivUnsupported):
        deriv_ibp1(g, {}, _scalar_entry(-1.0, 1.0))


def test_pinn_style_chain_sampled(rng):
    # scalar -> reshape [1] -> linear(1,3) -> tanh -> linear(3,1): u'(x) enclosure
    w1 = (0.8, -1.2, 0.5)
    b1 = (0.1, 0.0, -0.2)
    w2 = (1.0, 0.3, -0.7)
    b = GraphBuilder()
    x = b.input(Shape.scalar())
    v = b.add_node(Reshape(Shape.vector(1)), (x,))
    h = b.linear(v, 1, 3, "w1", "b1")
    t = b.unary(Tanh(), h)
    y = b.linear(t, 3, 1, "w2", "b2")
    store = ParamStore(
        [
            ("w1", TensorValue(Shape.matrix(3, 1), w1)),
            ("b1", TensorValue(Shape.vector(3), b1)),
            ("w2", TensorValue(Shape.matrix(1, 3), w2)),
            ("b2", TensorValue(Shape.vector(1), (0.05,))),
        ]
    )
    g = validate_graph(b.build(y), store)
    out = deriv_ibp1(g, dict(store.items()), _scalar_entry(-0.4, 0.4))
    _, dv = out[y]
    lo, hi = dv.lower.data[0], dv.upper.data[0]

    def du(xv):
        return sum(w2[i] * w1[i] * (1 - math.tanh(w1[i] * xv + b1[i]) ** 2) for i in range(3))

    for xv in rng.uniform(-0.4, 0.4, 500):
        assert lo - 1e-9 <= du(xv) <= hi + 1e-9
