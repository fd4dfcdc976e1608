"""boundflow: one op-tagged SSA/DAG graph IR serving forward evaluation,
reverse-mode differentiation, bit-level IEEE-754 binary32 execution,
interval/affine bound propagation, and replay-based certificate checking.
"""

__version__ = "0.1.0"

from .graph import (
    Graph,
    GraphBuilder,
    Node,
    ParamStore,
    TypingError,
    ValidationError,
    WellTypedGraph,
    infer_shape,
    validate_graph,
)
from .shapes import Shape, ShapeError, TensorValue, dot, unvec, vec

__all__ = [
    "Graph",
    "GraphBuilder",
    "Node",
    "ParamStore",
    "Shape",
    "ShapeError",
    "TensorValue",
    "TypingError",
    "ValidationError",
    "WellTypedGraph",
    "dot",
    "infer_shape",
    "unvec",
    "validate_graph",
    "vec",
]
