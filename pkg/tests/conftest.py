"""Shared test helpers: random well-typed graphs, contexts, and oracles."""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from boundflow import GraphBuilder, ParamStore, Shape, TensorValue, validate_graph
from boundflow.evaluate import Context, softmax_groups
from boundflow.graph import (
    Add,
    Exp,
    Flatten,
    Linear,
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
)

SMOOTH_UNARY = ("tanh", "sigmoid")
DEFAULT_OPS = ("linear", "relu", "tanh", "sigmoid", "add", "sub", "mul_elem",
               "reduce_mean", "softmax")


def random_graph(
    rng: np.random.Generator,
    max_depth: int = 6,
    max_width: int = 8,
    ops: tuple[str, ...] = DEFAULT_OPS,
    scalar_output: bool = False,
    min_depth: int = 2,
):
    """A random well-typed vector-chain graph with side branches.

    Weights are scaled so activations stay O(1); exp is only included when
    asked for explicitly.
    """
    builder = GraphBuilder()
    in_width = int(rng.integers(2, max_width + 1))
    x = builder.input(Shape.vector(in_width))
    entries: list[tuple[str, TensorValue]] = []
    pool = [(x, in_width)]
    current, width = x, in_width
    depth = int(rng.integers(min_depth, max_depth + 1))
    n_linear = 0

    for _ in range(depth):
        op = str(rng.choice(ops))
        if op == "linear":
            out_w = int(rng.integers(1, max_width + 1))
            wkey, bkey = f"w{n_linear}", f"bias{n_linear}"
            n_linear += 1
            scale = 1.2 / math.sqrt(width)
            entries.append(
                (wkey, TensorValue(Shape.matrix(out_w, width),
                                   tuple(rng.uniform(-scale, scale, out_w * width).tolist())))
            )
            entries.append(
                (bkey, TensorValue(Shape.vector(out_w),
                                   tuple(rng.uniform(-0.3, 0.3, out_w).tolist())))
            )
            current = builder.linear(current, width, out_w, wkey, bkey)
            width = out_w
        elif op in ("relu", "tanh", "sigmoid", "exp"):
            kind = {"relu": Relu, "tanh": Tanh, "sigmoid": Sigmoid, "exp": Exp}[op]()
            current = builder.unary(kind, current)
        elif op in ("add", "sub", "mul_elem"):
            same = [nid for nid, w in pool if w == width]
            other = int(rng.choice(same)) if same and rng.random() < 0.5 else None
            if other is None:
                pkey = f"p{len(entries)}"
                entries.append(
                    (pkey, TensorValue(Shape.vector(width),
                                       tuple(rng.uniform(-0.8, 0.8, width).tolist())))
                )
                other = builder.param(pkey, Shape.vector(width))
            kind = {"add": Add, "sub": Sub, "mul_elem": MulElem}[op]()
            current = builder.binary(kind, current, other)
        elif op == "softmax":
            current = builder.unary(Softmax(axis=0), current)
        elif op == "reduce_mean":
            continue  # only used for the scalar tail below
        else:
            raise ValueError(op)
        pool.append((current, width))

    if scalar_output:
        kind = ReduceMean() if rng.random() < 0.5 else ReduceSum()
        current = builder.add_node(kind, (current,))
    graph = builder.build(current)
    store = ParamStore(entries)
    return validate_graph(graph, store), store, x


def random_context(rng: np.random.Generator, g, store: ParamStore,
                   input_scale: float = 1.0) -> Context:
    inputs = tuple(
        TensorValue(g.node(i).out_shape,
                    tuple(rng.uniform(-input_scale, input_scale, g.node(i).out_shape.size).tolist()))
        for i in g.input_ids
    )
    return Context(inputs=inputs, params=store.values())


def random_context_like(rng: np.random.Generator, ctx: Context, scale: float = 1.0) -> Context:
    return Context(
        inputs=tuple(
            TensorValue(t.shape, tuple(rng.uniform(-scale, scale, t.shape.size).tolist()))
            for t in ctx.inputs
        ),
        params=tuple(
            TensorValue(t.shape, tuple(rng.uniform(-scale, scale, t.shape.size).tolist()))
            for t in ctx.params
        ),
    )


def zero_context_like(ctx: Context) -> Context:
    return Context(
        inputs=tuple(TensorValue(t.shape, (0.0,) * t.shape.size) for t in ctx.inputs),
        params=tuple(TensorValue(t.shape, (0.0,) * t.shape.size) for t in ctx.params),
    )


def relu_pre_activations(g, values) -> list[float]:
    pre = []
    for node in g.nodes:
        if isinstance(node.kind, Relu):
            pre.extend(values[node.parents[0]].data)
    return [float(v) for v in pre]


def numpy_forward_batch(g, store: ParamStore, xs: np.ndarray) -> dict[int, np.ndarray]:
    """Vectorized reference forward over a batch of single-input samples.

    Independent oracle for bound-soundness tests; cross-checked against the
    generic evaluator in test_eval.
    """
    params = {name: np.array(t.data, dtype=float).reshape(t.shape.dims or (1,))
              for name, t in store.items()}
    (input_id,) = g.input_ids
    values: dict[int, np.ndarray] = {}
    for node in g.nodes:
        kind = node.kind
        if node.id == input_id:
            values[node.id] = xs
            continue
        if isinstance(kind, Param):
            flat = np.array([float(v) for v in store.get(kind.key).data])
            values[node.id] = np.broadcast_to(flat, (xs.shape[0], flat.size))
            continue
        ps = [values[p] for p in node.parents]
        if isinstance(kind, Linear):
            w = params[kind.weight_key].reshape(kind.out_dim, kind.in_dim)
            b = params[kind.bias_key].reshape(kind.out_dim)
            values[node.id] = ps[0] @ w.T + b
        elif isinstance(kind, Relu):
            values[node.id] = np.maximum(ps[0], 0.0)
        elif isinstance(kind, Tanh):
            values[node.id] = np.tanh(ps[0])
        elif isinstance(kind, Sigmoid):
            values[node.id] = 1.0 / (1.0 + np.exp(-ps[0]))
        elif isinstance(kind, Exp):
            values[node.id] = np.exp(ps[0])
        elif isinstance(kind, Add):
            values[node.id] = ps[0] + ps[1]
        elif isinstance(kind, Sub):
            values[node.id] = ps[0] - ps[1]
        elif isinstance(kind, MulElem):
            values[node.id] = ps[0] * ps[1]
        elif isinstance(kind, (ReduceSum, ReduceMean)):
            s = ps[0].sum(axis=1, keepdims=True)
            if isinstance(kind, ReduceMean):
                s = s / ps[0].shape[1]
            values[node.id] = s
        elif isinstance(kind, (Reshape, Flatten)):
            values[node.id] = ps[0]
        elif isinstance(kind, Softmax):
            z = ps[0] - ps[0].max(axis=1, keepdims=True)
            e = np.exp(z)
            values[node.id] = e / e.sum(axis=1, keepdims=True)
        elif isinstance(kind, MseLoss):
            d = ps[0] - ps[1]
            values[node.id] = (d * d).mean(axis=1, keepdims=True)
        else:
            raise NotImplementedError(str(kind))
    return values


def central_difference(f, x0: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Componentwise central finite differences of a scalar function."""
    grad = np.zeros_like(x0)
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e[i] = h
        grad[i] = (f(x0 + e) - f(x0 - e)) / (2 * h)
    return grad


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
