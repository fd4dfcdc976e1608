"""Command-line surface: validate, eval, grad, train-demo, ibp, crown,
check-cert, and vnn-check, each emitting a machine-readable run report.

Exit codes: 0 success/accepted/safe-for-all, 1 rejected or unknown
present, 2 I/O or schema errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np

from . import ieee32
from .autograd import vjp
from .bounds import (
    B32_BACKING,
    REAL_BACKING,
    BoxEntry,
    RelaxParams,
    crown_backward,
    crown_forward,
    crown_sweep,
    run_ibp,
)
from .bundle import BundleFormatError, ModelBundle, load_bundle, load_tensor_file, save_bundle
from .certs import (
    check_certificate,
    check_unsat,
    make_certificate,
    parse_certificate,
    row_bound_from_box,
    serialize_certificate,
)
from .certs.schema import CertificateFormatError
from .evaluate import Context, EvalError, eval_graph
from .graph import MseLoss
from .ieee32 import IEEE32Domain
from .optim import sgd_step
from .scalars import FP32Rounded, RealRef, format_f32_decimal
from .shapes import TensorValue

DOMAINS = {"real": RealRef, "fp32": FP32Rounded, "ieee32": IEEE32Domain}


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = 2):
        super().__init__(message)
        self.exit_code = exit_code


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _load_bundle(path: str) -> ModelBundle:
    try:
        return load_bundle(_read(path), path)
    except BundleFormatError as exc:
        raise CliError(str(exc)) from exc


def _emit_report(report: dict[str, Any], out: str | None) -> None:
    text = json.dumps(report, indent=1, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _tensor_values(patterns: tuple[int, ...], domain_name: str):
    if domain_name == "ieee32":
        return patterns
    return tuple(ieee32.to_real(p) for p in patterns)


def _context_from_file(bundle: ModelBundle, g, input_path: str, domain_name: str) -> Context:
    tensors = load_tensor_file(_read(input_path), input_path)
    inputs = []
    for node_id in g.input_ids:
        if node_id not in tensors:
            raise CliError(f"{input_path}: missing input for node {node_id}")
        shape = g.node(node_id).out_shape
        values = tensors[node_id]
        if len(values) != shape.size:
            raise CliError(f"{input_path}: input {node_id} has {len(values)} values, want {shape.size}")
        inputs.append(TensorValue(shape, _tensor_values(values, domain_name)))
    store = bundle.param_store_b32() if domain_name == "ieee32" else bundle.param_store_float()
    return Context(inputs=tuple(inputs), params=store.values())


def _values_report(t: TensorValue, domain_name: str) -> dict[str, Any]:
    if domain_name == "ieee32":
        return {
            "hex": [ieee32.format_b32_hex(v) for v in t.data],
            "dec": [format_f32_decimal(ieee32.to_real(v)) for v in t.data],
        }
    out: dict[str, Any] = {"dec": [repr(float(v)) for v in t.data]}
    if domain_name == "fp32":
        out["hex"] = [ieee32.format_b32_hex(ieee32.from_real(float(v))) for v in t.data]
    return out


def _region_entries(bundle: ModelBundle, g, backing_name: str,
                    region_path: str | None) -> dict[int, BoxEntry]:
    region = bundle.input_region
    if region_path:
        obj = json.loads(_read(region_path))
        if "input_region" not in obj:
            raise CliError(f"{region_path}: missing input_region")
        from .certs.schema import canon_float

        region = {
            int(k): (
                tuple(ieee32.from_real(canon_float(v)) for v in entry["lo"]),
                tuple(ieee32.from_real(canon_float(v)) for v in entry["hi"]),
            )
            for k, entry in obj["input_region"].items()
        }
    if region is None:
        raise CliError("no input region: bundle has none and --input-region not given")
    entries = {}
    for node_id in g.input_ids:
        if node_id not in region:
            raise CliError(f"input region missing node {node_id}")
        lo, hi = region[node_id]
        shape = g.node(node_id).out_shape
        if backing_name == "b32":
            entries[node_id] = BoxEntry(TensorValue(shape, lo), TensorValue(shape, hi))
        else:
            entries[node_id] = BoxEntry(
                TensorValue(shape, tuple(ieee32.to_real(p) for p in lo)),
                TensorValue(shape, tuple(ieee32.to_real(p) for p in hi)),
            )
    return entries


def _box_report(entry: BoxEntry, backing_name: str) -> dict[str, Any]:
    if backing_name == "b32":
        return {
            "lo_hex": [ieee32.format_b32_hex(v) for v in entry.lower.data],
            "hi_hex": [ieee32.format_b32_hex(v) for v in entry.upper.data],
            "lo": [format_f32_decimal(ieee32.to_real(v)) for v in entry.lower.data],
            "hi": [format_f32_decimal(ieee32.to_real(v)) for v in entry.upper.data],
        }
    return {
        "lo": [repr(float(v)) for v in entry.lower.data],
        "hi": [repr(float(v)) for v in entry.upper.data],
    }


def _relax_from_file(path: str | None) -> RelaxParams:
    relax = RelaxParams()
    if path is None:
        return relax
    obj = json.loads(_read(path))
    for node_id, arr in obj.get("alpha", {}).items():
        relax.alpha[int(node_id)] = np.array([float(v) for v in arr])
    for node_id, arr in obj.get("beta", {}).items():
        relax.beta[int(node_id)] = np.array([int(v) for v in arr])
    return relax


# --- commands -------------------------------------------------------------------

def cmd_validate(args) -> int:
    bundle = _load_bundle(args.bundle)
    g = bundle.well_typed()
    _emit_report(
        {
            "command": "validate",
            "graph_id": bundle.graph_id,
            "status": "ok",
            "nodes": len(g),
            "inputs": len(g.input_ids),
            "params": len(g.param_names),
        },
        args.out,
    )
    return 0


def cmd_eval(args) -> int:
    bundle = _load_bundle(args.bundle)
    g = bundle.well_typed()
    ctx = _context_from_file(bundle, g, args.input, args.domain)
    dom = DOMAINS[args.domain]
    try:
        values = eval_graph(g, ctx, dom)
    except EvalError as exc:
        raise CliError(f"evaluation failed: {exc}", exit_code=1) from exc
    _emit_report(
        {
            "command": "eval",
            "graph_id": bundle.graph_id,
            "domain": args.domain,
            "output": _values_report(values[g.output_id], args.domain),
        },
        args.out,
    )
    return 0


def cmd_grad(args) -> int:
    bundle = _load_bundle(args.bundle)
    g = bundle.well_typed()
    ctx = _context_from_file(bundle, g, args.input, args.domain)
    seeds = load_tensor_file(_read(args.seed), args.seed)
    out_shape = g.output_shape
    seed_values = next(iter(seeds.values()))
    if len(seed_values) != out_shape.size:
        raise CliError(f"seed has {len(seed_values)} values, output needs {out_shape.size}")
    seed = TensorValue(out_shape, _tensor_values(seed_values, args.domain))
    dom = DOMAINS[args.domain]
    cot = vjp(g, ctx, seed, dom)
    _emit_report(
        {
            "command": "grad",
            "graph_id": bundle.graph_id,
            "domain": args.domain,
            "inputs": {
                str(nid): _values_report(t, args.domain)
                for nid, t in zip(g.input_ids, cot.inputs)
            },
            "params": {
                name: _values_report(t, args.domain)
                for name, t in zip(g.param_names, cot.params)
            },
        },
        args.out,
    )
    return 0


def cmd_train_demo(args) -> int:
    bundle = _load_bundle(args.bundle)
    g = bundle.well_typed()
    if not isinstance(g.node(g.output_id).kind, MseLoss) and not g.output_shape.is_scalar():
        raise CliError("train-demo needs a scalar loss output")
    dom = DOMAINS[args.domain]
    ctx = _context_from_file(bundle, g, args.input, args.domain)
    store = bundle.param_store_b32() if args.domain == "ieee32" else bundle.param_store_float()
    one = dom.one()
    losses = []
    for _ in range(args.steps):
        ctx = Context(inputs=ctx.inputs, params=store.values())
        loss = eval_graph(g, ctx, dom)[g.output_id].item()
        losses.append(dom.to_float(loss))
        grads = vjp(g, ctx, TensorValue(g.output_shape, (one,)), dom).params
        store = sgd_step(store, grads, args.lr, dom)
    ctx = Context(inputs=ctx.inputs, params=store.values())
    final = dom.to_float(eval_graph(g, ctx, dom)[g.output_id].item())
    losses.append(final)
    monotone = all(b < a for a, b in zip(losses, losses[1:]))
    _emit_report(
        {
            "command": "train-demo",
            "graph_id": bundle.graph_id,
            "domain": args.domain,
            "steps": args.steps,
            "lr": args.lr,
            "losses": [repr(v) for v in losses],
            "monotone_decrease": monotone,
            "final_over_initial": final / losses[0] if losses[0] else None,
        },
        args.out,
    )
    return 0


def cmd_ibp(args) -> int:
    bundle = _load_bundle(args.bundle)
    g = bundle.well_typed()
    backing = B32_BACKING if args.backing == "b32" else REAL_BACKING
    entries = _region_entries(bundle, g, args.backing, args.input_region)
    params = bundle.param_store_b32() if args.backing == "b32" else bundle.param_store_float()
    params_by_name = dict(params.items())
    t0 = time.perf_counter()
    boxes = run_ibp(g, params_by_name, entries, backing)
    elapsed = (time.perf_counter() - t0) * 1000.0
    _emit_report(
        {
            "command": "ibp",
            "graph_id": bundle.graph_id,
            "backing": args.backing,
            "nodes": {str(i): _box_report(e, args.backing) for i, e in sorted(boxes.items())},
            "output": _box_report(boxes[g.output_id], args.backing),
            "time_ms": elapsed,
        },
        args.out,
    )
    return 0


def cmd_crown(args) -> int:
    bundle = _load_bundle(args.bundle)
    g = bundle.well_typed()
    relax = _relax_from_file(args.alpha)
    params_float = dict(bundle.param_store_float().items())
    entries_real = _region_entries(bundle, g, "real", args.input_region)
    t0 = time.perf_counter()
    _, boxes = crown_forward(g, params_float, entries_real, relax)
    elapsed = (time.perf_counter() - t0) * 1000.0

    report: dict[str, Any] = {
        "command": "crown",
        "graph_id": bundle.graph_id,
        "backing": args.backing,
        "output": {
            "lo": [repr(v) for v in boxes[g.output_id][0].tolist()],
            "hi": [repr(v) for v in boxes[g.output_id][1].tolist()],
        },
        "time_ms": elapsed,
    }
    if args.backing == "b32":
        entries_b32 = _region_entries(bundle, g, "b32", args.input_region)
        b32_boxes = run_ibp(g, dict(bundle.param_store_b32().items()), entries_b32, B32_BACKING)
        report["output_ibp_b32"] = _box_report(b32_boxes[g.output_id], "b32")

    if args.objective:
        obj = json.loads(_read(args.objective))
        if "objective" not in obj:
            raise CliError(f"{args.objective}: missing objective array")
        from .certs.schema import canon_float

        c = np.array([float(canon_float(v)) for v in obj["objective"]])
        report["objective_lower_bound"] = repr(
            crown_backward(g, params_float, entries_real, c, relax)
        )

    if args.emit_cert:
        cert = make_certificate(g, params_float, entries_real, bundle.graph_id, relax)
        Path(args.emit_cert).write_bytes(serialize_certificate(cert))
        report["certificate"] = args.emit_cert

    _emit_report(report, args.out)
    return 0


def cmd_check_cert(args) -> int:
    bundle = _load_bundle(args.bundle)
    g = bundle.well_typed()
    try:
        cert = parse_certificate(_read(args.certificate))
    except CertificateFormatError as exc:
        raise CliError(f"{args.certificate}: {exc}") from exc
    report = check_certificate(g, dict(bundle.param_store_float().items()), cert,
                               graph_id=bundle.graph_id)
    _emit_report({"command": "check-cert", "graph_id": bundle.graph_id, **report.to_dict()}, args.out)
    return 0 if report.accepted else 1


def _instance_verdict(bundle: ModelBundle, method: str, relax: RelaxParams) -> str:
    g = bundle.well_typed()
    if bundle.prop is None:
        raise CliError(f"bundle {bundle.graph_id} has no property")
    params_float = dict(bundle.param_store_float().items())
    entries = _region_entries(bundle, g, "real", None)
    if method == "ibp":
        boxes = run_ibp(g, params_float, entries, REAL_BACKING)
        out = boxes[g.output_id]
        bound = row_bound_from_box([float(v) for v in out.lower.data],
                                   [float(v) for v in out.upper.data])
    elif method == "crown":
        _, boxes = crown_forward(g, params_float, entries, relax)
        lo, hi = boxes[g.output_id]
        bound = row_bound_from_box(lo.tolist(), hi.tolist())
    elif method == "crownobj":
        sweep = crown_sweep(g, params_float, entries, relax)

        def bound(c: np.ndarray, d: float) -> float:
            return crown_backward(g, params_float, entries, c, relax, sweep=sweep) - d
    else:
        raise CliError(f"unknown method {method!r}")
    return check_unsat(bundle.prop, bound)


def cmd_vnn_check(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        raise CliError(f"{args.directory} is not a directory")
    files = sorted(directory.glob("*.json"))
    if not files:
        raise CliError(f"no bundle files in {args.directory}")
    relax = _relax_from_file(args.alpha)
    instances = []
    skipped = []
    counts = {"safe": 0, "unknown": 0}
    t0 = time.perf_counter()
    for f in files:
        # auxiliary files (manifests, reports) may sit beside the bundles
        try:
            head = json.loads(f.read_bytes())
        except json.JSONDecodeError as exc:
            raise CliError(f"{f}: invalid JSON: {exc}") from exc
        if not isinstance(head, dict) or "nodes" not in head or "graph_id" not in head:
            skipped.append(f.name)
            continue
        bundle = _load_bundle(str(f))
        ti = time.perf_counter()
        verdict = _instance_verdict(bundle, args.method, relax)
        instances.append(
            {
                "instance": f.name,
                "graph_id": bundle.graph_id,
                "verdict": verdict,
                "time_ms": (time.perf_counter() - ti) * 1000.0,
            }
        )
        counts[verdict] += 1
    if not instances:
        raise CliError(f"no usable bundles in {args.directory}")
    report = {
        "command": "vnn-check",
        "method": args.method,
        "n": len(instances),
        "safe": counts["safe"],
        "unknown": counts["unknown"],
        "instances": instances,
        "total_time_ms": (time.perf_counter() - t0) * 1000.0,
    }
    if skipped:
        report["skipped"] = skipped
    _emit_report(report, args.out)
    return 0 if counts["unknown"] == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boundflow",
                                     description="Graph evaluation, bounds, and certificate checking.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate a bundle")
    p.add_argument("bundle")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("eval", help="evaluate a bundle on an input file")
    p.add_argument("bundle")
    p.add_argument("--input", required=True)
    p.add_argument("--domain", choices=sorted(DOMAINS), default="real")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("grad", help="reverse-mode cotangents for an input and seed")
    p.add_argument("bundle")
    p.add_argument("--input", required=True)
    p.add_argument("--seed", required=True)
    p.add_argument("--domain", choices=sorted(DOMAINS), default="real")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_grad)

    p = sub.add_parser("train-demo", help="small SGD training loop on a loss bundle")
    p.add_argument("bundle")
    p.add_argument("--input", required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.2)
    p.add_argument("--domain", choices=sorted(DOMAINS), default="ieee32")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_train_demo)

    p = sub.add_parser("ibp", help="interval bound propagation over the input region")
    p.add_argument("bundle")
    p.add_argument("--input-region")
    p.add_argument("--backing", choices=("real", "b32"), default="real")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_ibp)

    p = sub.add_parser("crown", help="affine bound propagation (optionally objective-directed)")
    p.add_argument("bundle")
    p.add_argument("--input-region")
    p.add_argument("--objective")
    p.add_argument("--alpha")
    p.add_argument("--backing", choices=("real", "b32"), default="real")
    p.add_argument("--emit-cert")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_crown)

    p = sub.add_parser("check-cert", help="replay-check a certificate against a bundle")
    p.add_argument("bundle")
    p.add_argument("certificate")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_check_cert)

    p = sub.add_parser("vnn-check", help="sufficient-UNSAT check over a directory of instances")
    p.add_argument("directory")
    p.add_argument("--method", choices=("ibp", "crown", "crownobj"), default="ibp")
    p.add_argument("--alpha")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_vnn_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (BundleFormatError, CertificateFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
