import json

import pytest

from boundflow import GraphBuilder, ParamStore, Shape, TensorValue
from boundflow import ieee32 as i32
from boundflow.bundle import (
    BundleFormatError,
    ModelBundle,
    load_bundle,
    load_tensor_file,
    save_bundle,
)
from boundflow.certs.goals import Clause, PropertySpec
from boundflow.graph import Relu


def _pats(vals):
    return tuple(i32.from_real(float(v)) for v in vals)


def _toy_bundle():
    b = GraphBuilder()
    x = b.input(Shape.vector(2))
    h = b.linear(x, 2, 2, "w1", "b1")
    r = b.unary(Relu(), h)
    y = b.linear(r, 2, 2, "w2", "b2")
    graph = b.build(y)
    return ModelBundle(
        graph_id="toy-mlp",
        graph=graph,
        params={
            "w1": (Shape.matrix(2, 2), _pats((1.0, -2.0, 0.5, 0.25))),
            "b1": (Shape.vector(2), _pats((0.5, -0.25))),
            "w2": (Shape.matrix(2, 2), _pats((1.0, 0.0, 0.0, 1.0))),
            "b2": (Shape.vector(2), _pats((0.0, 0.0))),
        },
        input_region={x: (_pats((-1.0, -1.0)), _pats((1.0, 1.0)))},
        prop=PropertySpec(clauses=(Clause(c=((1.0, -1.0),), d=(0.0,)),), output_size=2),
        metadata={"source": "unit-test"},
    ), x


def test_save_load_round_trip_canonical():
    bundle, _ = _toy_bundle()
    blob = save_bundle(bundle)
    loaded = load_bundle(blob)
    assert save_bundle(loaded) == blob
    assert loaded.graph_id == "toy-mlp"
    assert loaded.prop is not None and loaded.prop.output_size == 2
    assert loaded.metadata["source"] == "unit-test"


def test_hex_weight_is_exact():
    bundle, _ = _toy_bundle()
    blob = save_bundle(bundle)
    obj = json.loads(blob)
    assert obj["params"]["w1"]["hex"][0] == "0x3F800000"
    loaded = load_bundle(blob)
    assert loaded.param_store_float().get("w1").data[0] == 1.0


def test_missing_parent_node_rejected():
    bundle, _ = _toy_bundle()
    obj = json.loads(save_bundle(bundle))
    obj["nodes"][1]["parents"] = [7]
    with pytest.raises(BundleFormatError) as exc:
        load_bundle(json.dumps(obj))
    assert "missing node 7" in str(exc.value) or "validation" in str(exc.value)


def test_bad_graph_rejected_at_load():
    bundle, _ = _toy_bundle()
    obj = json.loads(save_bundle(bundle))
    obj["nodes"][1]["out_shape"] = [3]  # linear(2,2) cannot produce [3]
    with pytest.raises(BundleFormatError):
        load_bundle(json.dumps(obj))


def test_param_length_mismatch_rejected():
    bundle, _ = _toy_bundle()
    obj = json.loads(save_bundle(bundle))
    obj["params"]["b1"]["hex"] = obj["params"]["b1"]["hex"][:1]
    obj["params"]["b1"].pop("dec")
    with pytest.raises(BundleFormatError):
        load_bundle(json.dumps(obj))


def test_decimal_payload_accepted():
    bundle, _ = _toy_bundle()
    obj = json.loads(save_bundle(bundle))
    for p in obj["params"].values():
        p["dec"] = p.pop("hex")  # decimal-only payload
    loaded = load_bundle(json.dumps(obj))
    assert loaded.param_store_float().get("w1").data[0] == 1.0


def test_region_floats():
    bundle, x = _toy_bundle()
    loaded = load_bundle(save_bundle(bundle))
    region = loaded.region_floats()
    assert region[x][0] == (-1.0, -1.0) and region[x][1] == (1.0, 1.0)


def test_tensor_file_parse():
    data = {"inputs": {"0": {"hex": ["0x3F800000", "0x40000000"]}}}
    out = load_tensor_file(json.dumps(data))
    assert out[0] == (0x3F800000, 0x40000000)
    with pytest.raises(BundleFormatError):
        load_tensor_file("{}")
