"""Model/property bundle: canonical JSON persistence for graphs and weights.

A bundle carries the node list, the parameter payload (binary32 hex with a
decimal mirror for human reading), and optionally an input region and a
property specification.  Loading validates the graph; emission is
canonical (sorted keys, hex floats), so save(load(bytes)) is byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from . import ieee32
from .certs.goals import Clause, PropertySpec
from .certs.schema import canon_float
from .graph import (
    Add,
    Exp,
    Flatten,
    Graph,
    Input,
    Linear,
    MatMul,
    MseLoss,
    MulElem,
    Node,
    Op,
    Param,
    ParamStore,
    ReduceMean,
    ReduceSum,
    Relu,
    Reshape,
    Sigmoid,
    Softmax,
    Sub,
    Tanh,
    ValidationError,
    WellTypedGraph,
    validate_graph,
)
from .scalars import format_f32_decimal
from .shapes import Shape, TensorValue

SCHEMA_VERSION = 1


class BundleFormatError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_SIMPLE_OPS: dict[str, type] = {
    "input": Input,
    "matmul": MatMul,
    "add": Add,
    "sub": Sub,
    "mul_elem": MulElem,
    "relu": Relu,
    "tanh": Tanh,
    "sigmoid": Sigmoid,
    "exp": Exp,
    "reduce_sum": ReduceSum,
    "reduce_mean": ReduceMean,
    "flatten": Flatten,
    "mse_loss": MseLoss,
}


def _pattern_of(value: Any) -> int:
    return ieee32.from_real(canon_float(value))


def _parse_shape(obj: Any, path: str) -> Shape:
    if not isinstance(obj, list) or not all(isinstance(d, int) for d in obj):
        raise BundleFormatError(path, f"shape must be an array of ints, got {obj!r}")
    return Shape(tuple(obj))


def _parse_node(obj: Any, path: str) -> Node:
    for key in ("id", "op", "parents", "out_shape"):
        if key not in obj:
            raise BundleFormatError(path, f"node missing {key!r}")
    op_name = obj["op"]
    kind: Op
    if op_name in _SIMPLE_OPS:
        kind = _SIMPLE_OPS[op_name]()
    elif op_name == "param":
        kind = Param(str(obj["key"]))
    elif op_name == "linear":
        kind = Linear(
            in_dim=int(obj["in_dim"]),
            out_dim=int(obj["out_dim"]),
            weight_key=str(obj["weight_key"]),
            bias_key=str(obj["bias_key"]),
        )
    elif op_name == "softmax":
        kind = Softmax(axis=int(obj["axis"]))
    elif op_name == "reshape":
        kind = Reshape(target=_parse_shape(obj["target"], path))
    else:
        raise BundleFormatError(path, f"unknown op {op_name!r}")
    return Node(
        id=int(obj["id"]),
        parents=tuple(int(p) for p in obj["parents"]),
        kind=kind,
        out_shape=_parse_shape(obj["out_shape"], path),
    )


def _emit_node(node: Node) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": node.id,
        "op": node.kind.name(),
        "parents": list(node.parents),
        "out_shape": list(node.out_shape.dims),
    }
    kind = node.kind
    if isinstance(kind, Param):
        out["key"] = kind.key
    elif isinstance(kind, Linear):
        out.update(in_dim=kind.in_dim, out_dim=kind.out_dim,
                   weight_key=kind.weight_key, bias_key=kind.bias_key)
    elif isinstance(kind, Softmax):
        out["axis"] = kind.axis
    elif isinstance(kind, Reshape):
        out["target"] = list(kind.target.dims)
    return out


@dataclass
class ModelBundle:
    graph_id: str
    graph: Graph
    params: dict[str, tuple[Shape, tuple[int, ...]]]  # name -> (shape, patterns)
    input_region: dict[int, tuple[tuple[int, ...], tuple[int, ...]]] | None = None
    prop: PropertySpec | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def param_store_b32(self) -> ParamStore:
        return ParamStore(
            [(name, TensorValue(shape, pats)) for name, (shape, pats) in self.params.items()]
        )

    def param_store_float(self) -> ParamStore:
        return ParamStore(
            [
                (name, TensorValue(shape, tuple(ieee32.to_real(p) for p in pats)))
                for name, (shape, pats) in self.params.items()
            ]
        )

    def well_typed(self) -> WellTypedGraph:
        return validate_graph(self.graph, self.param_store_float())

    def region_floats(self) -> dict[int, tuple[tuple[float, ...], tuple[float, ...]]] | None:
        if self.input_region is None:
            return None
        return {
            nid: (
                tuple(ieee32.to_real(p) for p in lo),
                tuple(ieee32.to_real(p) for p in hi),
            )
            for nid, (lo, hi) in self.input_region.items()
        }


def _parse_values(obj: Any, path: str) -> tuple[int, ...]:
    if isinstance(obj, dict):
        payload = obj.get("hex", obj.get("dec"))
    else:
        payload = obj
    if not isinstance(payload, list):
        raise BundleFormatError(path, "value payload must be an array (or {hex:[...]})")
    return tuple(_pattern_of(v) for v in payload)


def _parse_property(obj: Any, path: str) -> PropertySpec:
    if not isinstance(obj, dict) or "clauses" not in obj or "output_size" not in obj:
        raise BundleFormatError(path, "property needs output_size and clauses")
    clauses = []
    for cobj in obj["clauses"]:
        rows = tuple(tuple(float(canon_float(v)) for v in row) for row in cobj["c"])
        d = tuple(float(canon_float(v)) for v in cobj["d"])
        clauses.append(Clause(c=rows, d=d))
    return PropertySpec(clauses=tuple(clauses), output_size=int(obj["output_size"]))


def load_bundle(data: bytes | str, path: str = "<bytes>") -> ModelBundle:
    """Parse and validate; a bundle that does not validate is unusable."""
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise BundleFormatError(path, f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise BundleFormatError(path, "bundle must be a JSON object")
    version = obj.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise BundleFormatError(path, f"unsupported schema_version {version}")
    for key in ("graph_id", "nodes", "output_id", "params"):
        if key not in obj:
            raise BundleFormatError(path, f"bundle missing {key!r}")

    nodes = [_parse_node(n, path) for n in obj["nodes"]]
    ids = {n.id for n in nodes}
    for n in nodes:
        for p in n.parents:
            if p not in ids:
                raise BundleFormatError(path, f"node {n.id} references missing node {p}")
    graph = Graph(tuple(sorted(nodes, key=lambda n: n.id)), output_id=int(obj["output_id"]))

    params: dict[str, tuple[Shape, tuple[int, ...]]] = {}
    for name, pobj in obj["params"].items():
        if not isinstance(pobj, dict) or "shape" not in pobj:
            raise BundleFormatError(path, f"param {name!r} needs a shape")
        shape = _parse_shape(pobj["shape"], path)
        values = _parse_values(pobj, path)
        if len(values) != shape.size:
            raise BundleFormatError(path, f"param {name!r}: {len(values)} values for shape {shape}")
        params[name] = (shape, values)

    region = None
    if "input_region" in obj and obj["input_region"] is not None:
        region = {}
        for key, entry in obj["input_region"].items():
            lo = tuple(_pattern_of(v) for v in entry["lo"])
            hi = tuple(_pattern_of(v) for v in entry["hi"])
            if len(lo) != len(hi):
                raise BundleFormatError(path, f"region {key}: lo/hi length mismatch")
            region[int(key)] = (lo, hi)

    prop = _parse_property(obj["property"], path) if obj.get("property") else None

    bundle = ModelBundle(
        graph_id=str(obj["graph_id"]),
        graph=graph,
        params=params,
        input_region=region,
        prop=prop,
        metadata=dict(obj.get("metadata", {})),
    )
    try:
        bundle.well_typed()
    except ValidationError as exc:
        raise BundleFormatError(path, f"graph validation failed: {exc}") from exc
    return bundle


def _emit_values(patterns: tuple[int, ...]) -> dict[str, list[str]]:
    return {
        "hex": [ieee32.format_b32_hex(p) for p in patterns],
        "dec": [format_f32_decimal(ieee32.to_real(p)) for p in patterns],
    }


def save_bundle(bundle: ModelBundle) -> bytes:
    obj: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "graph_id": bundle.graph_id,
        "nodes": [_emit_node(n) for n in bundle.graph.nodes],
        "output_id": bundle.graph.output_id,
        "params": {
            name: {"shape": list(shape.dims), **_emit_values(values)}
            for name, (shape, values) in sorted(bundle.params.items())
        },
    }
    if bundle.input_region is not None:
        obj["input_region"] = {
            str(nid): {
                "lo": [ieee32.format_b32_hex(p) for p in lo],
                "hi": [ieee32.format_b32_hex(p) for p in hi],
            }
            for nid, (lo, hi) in sorted(bundle.input_region.items())
        }
    if bundle.prop is not None:
        obj["property"] = {
            "output_size": bundle.prop.output_size,
            "clauses": [
                {"c": [list(row) for row in cl.c], "d": list(cl.d)} for cl in bundle.prop.clauses
            ],
        }
    if bundle.metadata:
        obj["metadata"] = bundle.metadata
    return json.dumps(obj, sort_keys=True, indent=1).encode()


def load_tensor_file(data: bytes | str, path: str = "<bytes>") -> dict[int, tuple[int, ...]]:
    """Input/seed tensor files: {"inputs": {"<node id>": {hex|dec: [...]}}}."""
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise BundleFormatError(path, f"invalid JSON: {exc}") from exc
    key = "inputs" if "inputs" in obj else "seed" if "seed" in obj else None
    if key is None:
        raise BundleFormatError(path, "tensor file needs an 'inputs' or 'seed' object")
    entries = obj[key]
    if not isinstance(entries, dict):
        raise BundleFormatError(path, f"{key} must be an object keyed by node id")
    return {int(k): _parse_values(v, path) for k, v in entries.items()}
