"""Op-tagged SSA/DAG graph IR.

Nodes are stored as a flat id-indexed list; parent ids are always smaller
than the child id, so ascending id order is a topological order and every
pass in the package is a single sweep.  ``validate_graph`` is the only
gate that produces a :class:`WellTypedGraph`, and everything downstream
(evaluation, autodiff, bound propagation, checking) requires one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .shapes import Shape, TensorValue


class TypingError(ValueError):
    """Shape inference failure: carries the offending parent index."""

    def __init__(self, message: str, parent_index: int | None = None):
        super().__init__(message)
        self.parent_index = parent_index


class ValidationError(ValueError):
    """Graph validation failure: names the first failing node and rule."""

    RULES = ("ssa-order", "arity", "shape", "param-resolution", "structure")

    def __init__(self, node_id: int, rule: str, message: str):
        super().__init__(f"node {node_id}: [{rule}] {message}")
        self.node_id = node_id
        self.rule = rule


# --- Op tags -----------------------------------------------------------------

@dataclass(frozen=True)
class Op:
    """Base of the op-tag union. Subclasses carry interpretation parameters."""

    def name(self) -> str:
        return _OP_NAMES[type(self)]


@dataclass(frozen=True)
class Input(Op):
    pass


@dataclass(frozen=True)
class Param(Op):
    key: str


@dataclass(frozen=True)
class Linear(Op):
    """Affine map x -> Wx + b; W/b resolve by key in the parameter store.

    W has shape [out_dim, in_dim], b has shape [out_dim].  Accepts a
    vector input [in_dim] or a batch [B, in_dim] applied row-wise.
    """

    in_dim: int
    out_dim: int
    weight_key: str
    bias_key: str


@dataclass(frozen=True)
class MatMul(Op):
    pass


@dataclass(frozen=True)
class Add(Op):
    pass


@dataclass(frozen=True)
class Sub(Op):
    pass


@dataclass(frozen=True)
class MulElem(Op):
    pass


@dataclass(frozen=True)
class Relu(Op):
    pass


@dataclass(frozen=True)
class Tanh(Op):
    pass


@dataclass(frozen=True)
class Sigmoid(Op):
    pass


@dataclass(frozen=True)
class Exp(Op):
    pass


@dataclass(frozen=True)
class ReduceSum(Op):
    pass


@dataclass(frozen=True)
class ReduceMean(Op):
    pass


@dataclass(frozen=True)
class Reshape(Op):
    target: Shape


@dataclass(frozen=True)
class Flatten(Op):
    pass


@dataclass(frozen=True)
class MseLoss(Op):
    pass


@dataclass(frozen=True)
class Softmax(Op):
    axis: int


_OP_NAMES: dict[type, str] = {
    Input: "input",
    Param: "param",
    Linear: "linear",
    MatMul: "matmul",
    Add: "add",
    Sub: "sub",
    MulElem: "mul_elem",
    Relu: "relu",
    Tanh: "tanh",
    Sigmoid: "sigmoid",
    Exp: "exp",
    ReduceSum: "reduce_sum",
    ReduceMean: "reduce_mean",
    Reshape: "reshape",
    Flatten: "flatten",
    MseLoss: "mse_loss",
    Softmax: "softmax",
}

OP_ARITY: dict[type, int] = {
    Input: 0,
    Param: 0,
    Linear: 1,
    MatMul: 2,
    Add: 2,
    Sub: 2,
    MulElem: 2,
    Relu: 1,
    Tanh: 1,
    Sigmoid: 1,
    Exp: 1,
    ReduceSum: 1,
    ReduceMean: 1,
    Reshape: 1,
    Flatten: 1,
    MseLoss: 2,
    Softmax: 1,
}

ELEMENTWISE_UNARY = (Relu, Tanh, Sigmoid, Exp)
ELEMENTWISE_BINARY = (Add, Sub, MulElem)


def infer_shape(kind: Op, parent_shapes: Sequence[Shape]) -> Shape:
    """Output shape of one primitive, or TypingError naming the bad parent."""
    if len(parent_shapes) != OP_ARITY[type(kind)]:
        raise TypingError(
            f"{kind.name()} expects {OP_ARITY[type(kind)]} parents, got {len(parent_shapes)}"
        )

    if isinstance(kind, (Input, Param)):
        raise TypingError(f"{kind.name()} has no inferable shape (leaf node)")

    if isinstance(kind, Linear):
        (s,) = parent_shapes
        if s.rank == 1 and s.dims[0] == kind.in_dim:
            return Shape.vector(kind.out_dim)
        if s.rank == 2 and s.dims[1] == kind.in_dim:
            return Shape.matrix(s.dims[0], kind.out_dim)
        raise TypingError(
            f"linear({kind.in_dim},{kind.out_dim}) cannot accept input of shape {s}",
            parent_index=0,
        )

    if isinstance(kind, MatMul):
        a, b = parent_shapes
        if a.rank != 2:
            raise TypingError(f"matmul left operand must be a matrix, got {a}", 0)
        if b.rank == 1:
            if b.dims[0] != a.dims[1]:
                raise TypingError(f"matmul inner dims {a.dims[1]} vs {b.dims[0]}", 1)
            return Shape.vector(a.dims[0])
        if b.rank == 2:
            if b.dims[0] != a.dims[1]:
                raise TypingError(f"matmul inner dims {a.dims[1]} vs {b.dims[0]}", 1)
            return Shape.matrix(a.dims[0], b.dims[1])
        raise TypingError(f"matmul right operand must be vector or matrix, got {b}", 1)

    if isinstance(kind, ELEMENTWISE_BINARY):
        a, b = parent_shapes
        if a != b:
            raise TypingError(f"{kind.name()} needs equal shapes, got {a} vs {b}", 1)
        return a

    if isinstance(kind, ELEMENTWISE_UNARY):
        return parent_shapes[0]

    if isinstance(kind, (ReduceSum, ReduceMean)):
        if parent_shapes[0].is_scalar():
            raise TypingError(f"{kind.name()} of a scalar", 0)
        return Shape.scalar()

    if isinstance(kind, Reshape):
        (s,) = parent_shapes
        if s.size != kind.target.size:
            raise TypingError(f"reshape {s} -> {kind.target}: size mismatch", 0)
        return kind.target

    if isinstance(kind, Flatten):
        (s,) = parent_shapes
        if s.is_scalar():
            raise TypingError("flatten of a scalar", 0)
        return Shape.vector(s.size)

    if isinstance(kind, MseLoss):
        a, b = parent_shapes
        if a != b:
            raise TypingError(f"mse_loss needs equal shapes, got {a} vs {b}", 1)
        return Shape.scalar()

    if isinstance(kind, Softmax):
        (s,) = parent_shapes
        if not 0 <= kind.axis < s.rank:
            raise TypingError(f"softmax axis {kind.axis} out of range for {s}", 0)
        return s

    raise TypingError(f"unknown op kind {kind!r}")


# --- Nodes and graphs --------------------------------------------------------

@dataclass(frozen=True)
class Node:
    id: int
    parents: tuple[int, ...]
    kind: Op
    out_shape: Shape


@dataclass(frozen=True)
class Graph:
    nodes: tuple[Node, ...]
    output_id: int


class ParamStore:
    """Ordered, named tensor entries. Entry order defines the context layout."""

    def __init__(self, entries: Sequence[tuple[str, TensorValue]] = ()):
        self._names: list[str] = []
        self._values: dict[str, TensorValue] = {}
        for name, value in entries:
            self.add(name, value)

    def add(self, name: str, value: TensorValue) -> None:
        if name in self._values:
            raise ValueError(f"duplicate parameter entry {name!r}")
        self._names.append(name)
        self._values[name] = value

    def __contains__(self, name: str) -> bool:
        return name in self._values

    def __len__(self) -> int:
        return len(self._names)

    def get(self, name: str) -> TensorValue:
        return self._values[name]

    def names(self) -> tuple[str, ...]:
        return tuple(self._names)

    def items(self) -> Iterator[tuple[str, TensorValue]]:
        for name in self._names:
            yield name, self._values[name]

    def index_of(self, name: str) -> int:
        return self._names.index(name)

    def replace_values(self, values: Sequence[TensorValue]) -> "ParamStore":
        """New store with the same names/order and the given tensors."""
        if len(values) != len(self._names):
            raise ValueError("replace_values: entry count mismatch")
        out = ParamStore()
        for name, value in zip(self._names, values):
            old = self._values[name]
            if value.shape != old.shape:
                raise ValueError(f"entry {name!r}: shape {value.shape} != {old.shape}")
            out.add(name, value)
        return out

    def values(self) -> tuple[TensorValue, ...]:
        return tuple(self._values[n] for n in self._names)


@dataclass(frozen=True)
class WellTypedGraph:
    """Sealed, validated graph; the capability every semantic pass requires.

    ``param_shapes`` records the store signature (name -> shape, in store
    order) at validation time; evaluation contexts are checked against it.
    """

    nodes: tuple[Node, ...]
    output_id: int
    input_ids: tuple[int, ...]
    param_names: tuple[str, ...]
    param_shapes: tuple[Shape, ...]

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def output_shape(self) -> Shape:
        return self.nodes[self.output_id].out_shape

    def input_shapes(self) -> tuple[Shape, ...]:
        return tuple(self.nodes[i].out_shape for i in self.input_ids)

    def param_shape(self, name: str) -> Shape:
        return self.param_shapes[self.param_names.index(name)]


def validate_graph(graph: Graph, params: ParamStore) -> WellTypedGraph:
    """Check SSA order, arity, shape agreement, and parameter resolution.

    Fails with the first offending node id and the rule it broke; on
    success the result is immutable and safe to share.
    """
    nodes = graph.nodes
    for i, node in enumerate(nodes):
        if node.id != i:
            raise ValidationError(node.id, "structure", f"node ids must be 0..{len(nodes) - 1} in order")

    if not nodes:
        raise ValidationError(0, "structure", "empty graph")
    if not 0 <= graph.output_id < len(nodes):
        raise ValidationError(graph.output_id, "structure", "output id out of range")

    input_ids: list[int] = []
    for node in nodes:
        for p in node.parents:
            if not 0 <= p < node.id:
                raise ValidationError(node.id, "ssa-order", f"parent {p} not defined before node {node.id}")
        arity = OP_ARITY[type(node.kind)]
        if len(node.parents) != arity:
            raise ValidationError(
                node.id, "arity", f"{node.kind.name()} expects {arity} parents, got {len(node.parents)}"
            )

        kind = node.kind
        if isinstance(kind, Input):
            input_ids.append(node.id)
        elif isinstance(kind, Param):
            if kind.key not in params:
                raise ValidationError(node.id, "param-resolution", f"no parameter entry {kind.key!r}")
            entry_shape = params.get(kind.key).shape
            if entry_shape != node.out_shape:
                raise ValidationError(
                    node.id,
                    "param-resolution",
                    f"param {kind.key!r} has shape {entry_shape}, node declares {node.out_shape}",
                )
        else:
            if isinstance(kind, Linear):
                for key, want in (
                    (kind.weight_key, Shape.matrix(kind.out_dim, kind.in_dim)),
                    (kind.bias_key, Shape.vector(kind.out_dim)),
                ):
                    if key not in params:
                        raise ValidationError(node.id, "param-resolution", f"no parameter entry {key!r}")
                    if params.get(key).shape != want:
                        raise ValidationError(
                            node.id,
                            "param-resolution",
                            f"linear entry {key!r} has shape {params.get(key).shape}, expected {want}",
                        )
            parent_shapes = [nodes[p].out_shape for p in node.parents]
            try:
                inferred = infer_shape(kind, parent_shapes)
            except TypingError as exc:
                raise ValidationError(node.id, "shape", str(exc)) from exc
            if inferred != node.out_shape:
                raise ValidationError(
                    node.id, "shape", f"declared {node.out_shape}, inferred {inferred}"
                )

    return WellTypedGraph(
        nodes=tuple(nodes),
        output_id=graph.output_id,
        input_ids=tuple(input_ids),
        param_names=params.names(),
        param_shapes=tuple(v.shape for v in params.values()),
    )


class GraphBuilder:
    """Mutable construction surface; ``build`` freezes into a Graph."""

    def __init__(self) -> None:
        self._nodes: list[Node] = []

    def _add(self, kind: Op, parents: Sequence[int], out_shape: Shape) -> int:
        node_id = len(self._nodes)
        self._nodes.append(Node(node_id, tuple(parents), kind, out_shape))
        return node_id

    def add_node(self, kind: Op, parents: Sequence[int], out_shape: Shape | None = None) -> int:
        if out_shape is None:
            out_shape = infer_shape(kind, [self._nodes[p].out_shape for p in parents])
        return self._add(kind, parents, out_shape)

    def input(self, shape: Shape) -> int:
        return self._add(Input(), (), shape)

    def param(self, key: str, shape: Shape) -> int:
        return self._add(Param(key), (), shape)

    def linear(self, x: int, in_dim: int, out_dim: int, weight_key: str, bias_key: str) -> int:
        return self.add_node(Linear(in_dim, out_dim, weight_key, bias_key), (x,))

    def unary(self, kind: Op, x: int) -> int:
        return self.add_node(kind, (x,))

    def binary(self, kind: Op, a: int, b: int) -> int:
        return self.add_node(kind, (a, b))

    def shape_of(self, node_id: int) -> Shape:
        return self._nodes[node_id].out_shape

    def build(self, output_id: int | None = None) -> Graph:
        if output_id is None:
            output_id = len(self._nodes) - 1
        return Graph(tuple(self._nodes), output_id)
