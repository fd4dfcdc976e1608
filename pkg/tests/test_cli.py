import json

import numpy as np
import pytest

from boundflow import GraphBuilder, ParamStore, Shape, TensorValue
from boundflow import ieee32 as i32
from boundflow.bundle import ModelBundle, save_bundle
from boundflow.certs.goals import Clause, PropertySpec
from boundflow.cli import main
from boundflow.graph import MseLoss, Relu


def _pats(vals):
    return tuple(i32.from_real(float(v)) for v in vals)


@pytest.fixture
def toy_bundle_path(tmp_path):
    b = GraphBuilder()
    x = b.input(Shape.vector(2))
    h = b.linear(x, 2, 2, "w1", "b1")
    r = b.unary(Relu(), h)
    graph = b.build(r)
    bundle = ModelBundle(
        graph_id="toy",
        graph=graph,
        params={
            "w1": (Shape.matrix(2, 2), _pats((1.0, -2.0, 0.5, 0.25))),
            "b1": (Shape.vector(2), _pats((0.5, -0.25))),
        },
        input_region={x: (_pats((-1.0, -1.0)), _pats((1.0, 1.0)))},
    )
    path = tmp_path / "toy.json"
    path.write_bytes(save_bundle(bundle))
    return path, x


def _input_file(tmp_path, node_id, values):
    path = tmp_path / "in.json"
    path.write_text(json.dumps({"inputs": {str(node_id): {"dec": [str(v) for v in values]}}}))
    return path


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip().startswith("{") else out


def test_validate(toy_bundle_path, capsys):
    path, _ = toy_bundle_path
    code, report = _run(capsys, "validate", path)
    assert code == 0 and report["status"] == "ok" and report["nodes"] == 3


def test_validate_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{]")
    assert main(["validate", str(bad)]) == 2


def test_eval_domains(toy_bundle_path, tmp_path, capsys):
    path, x = toy_bundle_path
    inp = _input_file(tmp_path, x, (0.5, -0.5))
    code, report = _run(capsys, "eval", path, "--input", inp, "--domain", "ieee32")
    assert code == 0
    assert report["output"]["hex"] == ["0x40000000", "0x00000000"]
    code, report = _run(capsys, "eval", path, "--input", inp, "--domain", "real")
    assert code == 0 and float(report["output"]["dec"][0]) == 2.0


def test_grad(toy_bundle_path, tmp_path, capsys):
    path, x = toy_bundle_path
    inp = _input_file(tmp_path, x, (0.5, -0.5))
    seed = tmp_path / "seed.json"
    seed.write_text(json.dumps({"seed": {"0": {"dec": ["1", "0"]}}}))
    code, report = _run(capsys, "grad", path, "--input", inp, "--seed", seed)
    assert code == 0
    assert [float(v) for v in report["inputs"][str(x)]["dec"]] == [1.0, -2.0]


def test_ibp_both_backings(toy_bundle_path, capsys):
    path, _ = toy_bundle_path
    code, report = _run(capsys, "ibp", path)
    assert code == 0 and float(report["output"]["lo"][0]) == 0.0
    code, report = _run(capsys, "ibp", path, "--backing", "b32")
    assert code == 0 and report["output"]["lo_hex"][0] == "0x00000000"


def test_crown_with_objective_and_cert(toy_bundle_path, tmp_path, capsys):
    path, _ = toy_bundle_path
    obj = tmp_path / "obj.json"
    obj.write_text(json.dumps({"objective": ["1", "-1"]}))
    cert_path = tmp_path / "cert.json"
    code, report = _run(capsys, "crown", path, "--objective", obj, "--emit-cert", cert_path)
    assert code == 0 and "objective_lower_bound" in report
    assert cert_path.exists()
    code, report = _run(capsys, "check-cert", path, cert_path)
    assert code == 0 and report["verdict"] == "accepted"

    # corrupt one byte-level value: rejected, exit 1
    cert = json.loads(cert_path.read_text())
    some = sorted(cert["bounds"].keys(), key=int)[-1]
    u = i32.parse_b32_hex(cert["bounds"][some]["hi"][0])
    cert["bounds"][some]["hi"][0] = i32.format_b32_hex(i32.next_up_b32(u))
    cert_path.write_text(json.dumps(cert))
    code, report = _run(capsys, "check-cert", path, cert_path)
    assert code == 1 and report["verdict"] == "rejected"


def test_train_demo(tmp_path, capsys):
    b = GraphBuilder()
    x = b.input(Shape.matrix(3, 2))
    t = b.input(Shape.matrix(3, 1))
    pred = b.linear(x, 2, 1, "w", "b")
    loss = b.binary(MseLoss(), pred, t)
    graph = b.build(loss)
    bundle = ModelBundle(
        graph_id="regress",
        graph=graph,
        params={
            "w": (Shape.matrix(1, 2), _pats((0.0, 0.0))),
            "b": (Shape.vector(1), _pats((0.0,))),
        },
    )
    path = tmp_path / "regress.json"
    path.write_bytes(save_bundle(bundle))
    inp = tmp_path / "data.json"
    inp.write_text(json.dumps({
        "inputs": {
            str(x): {"dec": ["1", "0", "0", "1", "1", "1"]},
            str(t): {"dec": ["2", "-3", "-1"]},
        }
    }))
    code = main(["train-demo", str(path), "--input", str(inp), "--steps", "10",
                 "--lr", "0.2", "--domain", "ieee32"])
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    assert report["monotone_decrease"] is True
    assert report["final_over_initial"] < 0.1


def test_vnn_check_counts(tmp_path, capsys):
    # two instances: one certifiable, one not
    def make_instance(name, w, region_hi):
        b = GraphBuilder()
        x = b.input(Shape.vector(1))
        y = b.linear(x, 1, 1, "w", "b")
        graph = b.build(y)
        bundle = ModelBundle(
            graph_id=name,
            graph=graph,
            params={
                "w": (Shape.matrix(1, 1), _pats((w,))),
                "b": (Shape.vector(1), _pats((1.0,))),
            },
            input_region={x: (_pats((0.0,)), _pats((region_hi,)))},
            # counterexample clause: y <= 0; safe iff lower bound of y > 0
            prop=PropertySpec(clauses=(Clause(c=((1.0,),), d=(0.0,)),), output_size=1),
        )
        (tmp_path / name).with_suffix(".json").write_bytes(save_bundle(bundle))

    make_instance("safe_one", 1.0, 1.0)      # y in [1, 2] > 0: safe
    make_instance("unknown_one", -2.0, 1.0)  # y in [-1, 1]: unknown
    code, report = _run(capsys, "vnn-check", tmp_path, "--method", "ibp")
    assert code == 1
    assert report["safe"] == 1 and report["unknown"] == 1
    assert report["instances"][0]["instance"] == "safe_one.json"

    code, report = _run(capsys, "vnn-check", tmp_path, "--method", "crownobj")
    assert code == 1 and report["safe"] == 1


def test_vnn_check_all_safe_exit_zero(tmp_path, capsys):
    b = GraphBuilder()
    x = b.input(Shape.vector(1))
    y = b.linear(x, 1, 1, "w", "b")
    graph = b.build(y)
    bundle = ModelBundle(
        graph_id="ok",
        graph=graph,
        params={"w": (Shape.matrix(1, 1), _pats((1.0,))),
                "b": (Shape.vector(1), _pats((1.0,)))},
        input_region={x: (_pats((0.0,)), _pats((1.0,)))},
        prop=PropertySpec(clauses=(Clause(c=((1.0,),), d=(0.0,)),), output_size=1),
    )
    (tmp_path / "a.json").write_bytes(save_bundle(bundle))
    code, report = _run(capsys, "vnn-check", tmp_path)
    assert code == 0 and report["safe"] == 1 and report["unknown"] == 0


def test_eval_deterministic(toy_bundle_path, tmp_path, capsys):
    path, x = toy_bundle_path
    inp = _input_file(tmp_path, x, (0.25, 0.75))
    _, r1 = _run(capsys, "eval", path, "--input", inp, "--domain", "ieee32")
    _, r2 = _run(capsys, "eval", path, "--input", inp, "--domain", "ieee32")
    assert r1["output"] == r2["output"]
