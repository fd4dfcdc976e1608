"""Replay-based certificate checking.

The checker never trusts provided bounds: it recomputes every certified
node with the same step semantics the native sweeps use (ibp_step for
boxes, the shared CROWN step for affine forms, relu_relax with the
supplied alpha/beta) on binary32-canonicalized values, and accepts only
bit-exact agreement.  All failures are rejection reports, never raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .. import ieee32
from ..bounds import (
    BoxEntry,
    NodeCrown,
    RelaxParams,
    crown_step_box,
    crown_step_forms,
    crown_sweep,
    f32_quantizer,
    input_layout,
)
from ..bounds.relax import PhaseError
from ..graph import Relu, WellTypedGraph
from ..shapes import TensorValue
from .schema import Certificate, NodeBounds

RULE_SCHEMA = "schema"
RULE_TOPO = "topo-order"
RULE_PHASE = "phase"
RULE_BOUND = "bound-mismatch"
RULE_GOAL = "goal"


@dataclass(frozen=True)
class CheckReport:
    verdict: str  # accepted | rejected
    node_id: int | None = None
    rule: str | None = None
    expected: str | None = None
    provided: str | None = None
    message: str | None = None

    @property
    def accepted(self) -> bool:
        return self.verdict == "accepted"

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"verdict": self.verdict}
        for key in ("node_id", "rule", "expected", "provided", "message"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v
        return out


def _accept() -> CheckReport:
    return CheckReport("accepted")


def _reject(node_id: int | None, rule: str, message: str,
            expected: str | None = None, provided: str | None = None) -> CheckReport:
    return CheckReport("rejected", node_id=node_id, rule=rule,
                       expected=expected, provided=provided, message=message)


def _bits(v: float) -> int:
    return ieee32.from_real(v)


def _arrays_equal_bits(computed: np.ndarray, provided: tuple[float, ...]) -> int | None:
    """Index of the first bit-level disagreement, or None."""
    flat = np.asarray(computed, dtype=float).ravel()
    if len(flat) != len(provided):
        return -1
    for i, (c, p) in enumerate(zip(flat.tolist(), provided)):
        if _bits(c) != _bits(p):
            return i
    return None


def _relax_from_cert(cert: Certificate) -> RelaxParams:
    relax = RelaxParams()
    for node_id, nb in cert.bounds.items():
        if nb.alpha is not None:
            relax.alpha[node_id] = np.array(nb.alpha, dtype=float)
        if nb.beta is not None:
            relax.beta[node_id] = np.array(nb.beta, dtype=int)
    return relax


def _region_entries(g: WellTypedGraph, cert: Certificate) -> dict[int, BoxEntry] | CheckReport:
    entries: dict[int, BoxEntry] = {}
    for node_id in g.input_ids:
        if node_id not in cert.input_region:
            return _reject(node_id, RULE_SCHEMA, f"input_region missing node {node_id}")
        lo, hi = cert.input_region[node_id]
        shape = g.node(node_id).out_shape
        if len(lo) != shape.size:
            return _reject(node_id, RULE_SCHEMA,
                           f"region length {len(lo)} does not match input size {shape.size}")
        if any(a > b for a, b in zip(lo, hi)):
            return _reject(node_id, RULE_SCHEMA, "region has lo > hi")
        entries[node_id] = BoxEntry(TensorValue(shape, lo), TensorValue(shape, hi))
    for node_id in cert.input_region:
        if node_id not in g.input_ids:
            return _reject(node_id, RULE_SCHEMA, f"region names non-input node {node_id}")
    return entries


def check_certificate(
    g: WellTypedGraph,
    params_by_name: dict[str, TensorValue],
    cert: Certificate,
    graph_id: str | None = None,
) -> CheckReport:
    """Replay every certified node and demand bit-exact agreement."""
    if graph_id is not None and cert.graph_id != graph_id:
        return _reject(None, RULE_SCHEMA,
                       f"certificate is for graph {cert.graph_id!r}, not {graph_id!r}")
    for node_id in cert.bounds:
        if not 0 <= node_id < len(g.nodes):
            return _reject(node_id, RULE_SCHEMA, f"node {node_id} not in graph")

    region = _region_entries(g, cert)
    if isinstance(region, CheckReport):
        return region

    relax = _relax_from_cert(cert)
    offsets, in_size = input_layout(g)
    params_float = {
        name: TensorValue(t.shape, tuple(float(v) for v in t.data))
        for name, t in params_by_name.items()
    }

    computed: dict[int, NodeCrown] = {}
    for node in g.nodes:
        nb = cert.bounds.get(node.id)
        if nb is None:
            continue
        for p in node.parents:
            if p not in computed:
                return _reject(node.id, RULE_TOPO,
                               f"parent {p} has no certified bounds at use time")
        if len(nb.lo) != node.out_shape.size:
            return _reject(node.id, RULE_SCHEMA,
                           f"bounds length {len(nb.lo)} does not match node size {node.out_shape.size}")

        try:
            box_lo, box_hi = crown_step_box(g, node, computed, region, params_float, f32_quantizer)
        except Exception as exc:  # malformed payload surfaced mid-replay
            return _reject(node.id, RULE_SCHEMA, f"replaying box failed: {exc}")

        bad = _arrays_equal_bits(box_lo, nb.lo)
        if bad is not None:
            return _reject(node.id, RULE_BOUND, f"lower bound mismatch at element {bad}",
                           expected=_hex_preview(box_lo, bad), provided=_hex_preview(nb.lo, bad))
        bad = _arrays_equal_bits(box_hi, nb.hi)
        if bad is not None:
            return _reject(node.id, RULE_BOUND, f"upper bound mismatch at element {bad}",
                           expected=_hex_preview(box_hi, bad), provided=_hex_preview(nb.hi, bad))

        if isinstance(node.kind, Relu) and nb.beta is not None:
            parent_nb = cert.bounds[node.parents[0]]
            for i, beta in enumerate(nb.beta):
                l, u = parent_nb.lo[i], parent_nb.hi[i]
                if beta == -1 and not u <= 0.0:
                    return _reject(node.id, RULE_PHASE,
                                   f"beta=-1 at element {i} conflicts with box [{l}, {u}]")
                if beta == 1 and not 0.0 <= l:
                    return _reject(node.id, RULE_PHASE,
                                   f"beta=+1 at element {i} conflicts with box [{l}, {u}]")
        if nb.alpha is not None and any(not 0.0 <= a <= 1.0 for a in nb.alpha):
            return _reject(node.id, RULE_SCHEMA, "alpha outside [0, 1]")

        if nb.has_affine:
            try:
                forms = crown_step_forms(g, node, computed, box_lo, box_hi, relax,
                                         params_float, offsets, in_size, f32_quantizer)
            except PhaseError as exc:
                return _reject(node.id, RULE_PHASE, str(exc))
            except Exception as exc:
                return _reject(node.id, RULE_SCHEMA, f"replaying affine forms failed: {exc}")
            for name, comp, prov in (
                ("aL", forms.lower.a, tuple(v for row in nb.a_lower for v in row)),
                ("bL", forms.lower.b, nb.b_lower),
                ("aU", forms.upper.a, tuple(v for row in nb.a_upper for v in row)),
                ("bU", forms.upper.b, nb.b_upper),
            ):
                bad = _arrays_equal_bits(comp, prov)
                if bad is not None:
                    return _reject(node.id, RULE_BOUND, f"{name} mismatch at element {bad}",
                                   expected=_hex_preview(comp, bad), provided=_hex_preview(prov, bad))
            computed[node.id] = NodeCrown(box_lo=box_lo, box_hi=box_hi, forms=forms)
        else:
            # no affine payload: children compose against constant forms
            from ..bounds.crown import _const_forms

            computed[node.id] = NodeCrown(box_lo=box_lo, box_hi=box_hi,
                                          forms=_const_forms(box_lo, box_hi, in_size))
    return _accept()


def _hex_preview(values, index: int) -> str:
    flat = np.asarray(values, dtype=float).ravel() if not isinstance(values, tuple) else np.array(values)
    if index == -1 or index >= len(flat):
        return f"length {len(flat)}"
    return ieee32.format_b32_hex(_bits(float(flat[index])))


def make_certificate(
    g: WellTypedGraph,
    params_by_name: dict[str, TensorValue],
    input_entries: dict[int, BoxEntry],
    graph_id: str,
    relax: RelaxParams | None = None,
    with_affine: bool = True,
) -> Certificate:
    """Emit a certificate of this artifact's own bounds (replay-stable).

    The sweep runs with binary32 quantization after every node so the
    checker's replay reproduces each payload bit-for-bit.
    """
    relax = relax or RelaxParams()
    sweep = crown_sweep(g, params_by_name, input_entries, relax, quantize=f32_quantizer)
    bounds: dict[int, NodeBounds] = {}
    for node in g.nodes:
        nc = sweep[node.id]
        kwargs: dict[str, Any] = {}
        if with_affine:
            kwargs.update(
                a_lower=tuple(tuple(row) for row in nc.forms.lower.a.tolist()),
                b_lower=tuple(nc.forms.lower.b.tolist()),
                a_upper=tuple(tuple(row) for row in nc.forms.upper.a.tolist()),
                b_upper=tuple(nc.forms.upper.b.tolist()),
            )
        if isinstance(node.kind, Relu):
            size = node.out_shape.size
            kwargs["alpha"] = tuple(relax.alpha_for(node.id, size).tolist())
            kwargs["beta"] = tuple(int(b) for b in relax.beta_for(node.id, size))
        bounds[node.id] = NodeBounds(lo=tuple(nc.box_lo.tolist()), hi=tuple(nc.box_hi.tolist()), **kwargs)

    region = {}
    for node_id in g.input_ids:
        entry = input_entries[node_id]
        lo = tuple(float(np.float32(float(v))) for v in entry.lower.data)
        hi = tuple(float(np.float32(float(v))) for v in entry.upper.data)
        region[node_id] = (lo, hi)
    return Certificate(graph_id=graph_id, input_region=region, bounds=bounds)
