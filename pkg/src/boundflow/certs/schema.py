"""Certificate artifact: schema, float-grid canonicalization, serialization.

A certificate is an externally produced JSON object of per-node bounds
(and optional affine forms / relaxation parameters) for one graph and one
input region.  All numerics are canonicalized onto the binary32 grid
before any comparison: decimal payloads parse to binary64 and round
nearest-even; "0x…" payloads are binary32 bit patterns taken verbatim.
Emitted certificates always carry hex.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .. import ieee32
from ..scalars import fp32_round

SCHEMA_VERSION = 1


class CertificateFormatError(ValueError):
    """Malformed certificate bytes (parse/schema level, before checking)."""


def canon_float(value: Any) -> float:
    """Canonicalize one payload number to an exact binary32-grid binary64."""
    if isinstance(value, str):
        s = value.strip()
        if s.lower().startswith("0x"):
            u = ieee32.parse_b32_hex(s)
            if ieee32.is_nan(u):
                raise CertificateFormatError(f"NaN bit pattern {s!r} not allowed")
            return ieee32.to_real(u)
        value = float(s)
    v = float(value)
    if math.isnan(v):
        raise CertificateFormatError("NaN payload not allowed")
    if math.isinf(v):
        return v
    return fp32_round(v)


def canon_list(values: Any, expect_len: int | None = None) -> tuple[float, ...]:
    if not isinstance(values, (list, tuple)):
        raise CertificateFormatError(f"expected an array, got {type(values).__name__}")
    out = tuple(canon_float(v) for v in values)
    if expect_len is not None and len(out) != expect_len:
        raise CertificateFormatError(f"array length {len(out)}, expected {expect_len}")
    return out


def emit_float(v: float) -> str:
    """Hex form of a grid value for emission."""
    return ieee32.format_b32_hex(ieee32.from_real(v))


@dataclass(frozen=True)
class NodeBounds:
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    a_lower: tuple[tuple[float, ...], ...] | None = None
    b_lower: tuple[float, ...] | None = None
    a_upper: tuple[tuple[float, ...], ...] | None = None
    b_upper: tuple[float, ...] | None = None
    alpha: tuple[float, ...] | None = None
    beta: tuple[int, ...] | None = None

    @property
    def has_affine(self) -> bool:
        return self.a_lower is not None


@dataclass(frozen=True)
class Leaf:
    region: dict[int, tuple[tuple[float, ...], tuple[float, ...]]]
    claimed_lower_bound: float
    threshold: float
    bounds: dict[int, NodeBounds] = field(default_factory=dict)


@dataclass(frozen=True)
class Certificate:
    graph_id: str
    input_region: dict[int, tuple[tuple[float, ...], tuple[float, ...]]]
    bounds: dict[int, NodeBounds]
    leaves: tuple[Leaf, ...] = ()


def _parse_region(obj: Any) -> dict[int, tuple[tuple[float, ...], tuple[float, ...]]]:
    if not isinstance(obj, dict):
        raise CertificateFormatError("input_region must be an object")
    region = {}
    for key, entry in obj.items():
        try:
            node_id = int(key)
        except ValueError as exc:
            raise CertificateFormatError(f"region key {key!r} is not a node id") from exc
        if not isinstance(entry, dict) or "lo" not in entry or "hi" not in entry:
            raise CertificateFormatError(f"region entry {key} needs lo and hi arrays")
        lo = canon_list(entry["lo"])
        hi = canon_list(entry["hi"], expect_len=len(lo))
        region[node_id] = (lo, hi)
    return region


def _parse_matrix(obj: Any) -> tuple[tuple[float, ...], ...]:
    if not isinstance(obj, list):
        raise CertificateFormatError("coefficient matrix must be an array of rows")
    rows = tuple(canon_list(row) for row in obj)
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise CertificateFormatError("ragged coefficient matrix")
    return rows


def _parse_node_bounds(obj: Any) -> NodeBounds:
    if not isinstance(obj, dict) or "lo" not in obj or "hi" not in obj:
        raise CertificateFormatError("node bounds need lo and hi arrays")
    lo = canon_list(obj["lo"])
    hi = canon_list(obj["hi"], expect_len=len(lo))
    affine_keys = ("aL", "bL", "aU", "bU")
    present = [k for k in affine_keys if k in obj]
    if present and len(present) != 4:
        raise CertificateFormatError(f"partial affine payload: only {present} given")
    kwargs: dict[str, Any] = {}
    if present:
        kwargs["a_lower"] = _parse_matrix(obj["aL"])
        kwargs["b_lower"] = canon_list(obj["bL"], expect_len=len(lo))
        kwargs["a_upper"] = _parse_matrix(obj["aU"])
        kwargs["b_upper"] = canon_list(obj["bU"], expect_len=len(lo))
        if len(kwargs["a_lower"]) != len(lo) or len(kwargs["a_upper"]) != len(lo):
            raise CertificateFormatError("affine row count must match node size")
    if "alpha" in obj:
        kwargs["alpha"] = canon_list(obj["alpha"], expect_len=len(lo))
    if "beta" in obj:
        raw = obj["beta"]
        if not isinstance(raw, list):
            raise CertificateFormatError("beta must be an array")
        beta = []
        for v in raw:
            iv = int(v)
            if iv not in (-1, 0, 1):
                raise CertificateFormatError(f"beta value {v!r} outside {{-1,0,1}}")
            beta.append(iv)
        if len(beta) != len(lo):
            raise CertificateFormatError("beta length must match node size")
        kwargs["beta"] = tuple(beta)
    return NodeBounds(lo=lo, hi=hi, **kwargs)


def _parse_bounds_map(obj: Any) -> dict[int, NodeBounds]:
    if not isinstance(obj, dict):
        raise CertificateFormatError("bounds must be an object keyed by node id")
    out = {}
    for key, entry in obj.items():
        try:
            node_id = int(key)
        except ValueError as exc:
            raise CertificateFormatError(f"bounds key {key!r} is not a node id") from exc
        out[node_id] = _parse_node_bounds(entry)
    return out


def parse_certificate(data: bytes | str | dict) -> Certificate:
    if isinstance(data, (bytes, str)):
        try:
            obj = json.loads(data)
        except json.JSONDecodeError as exc:
            raise CertificateFormatError(f"invalid JSON: {exc}") from exc
    else:
        obj = data
    if not isinstance(obj, dict):
        raise CertificateFormatError("certificate must be a JSON object")
    version = obj.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise CertificateFormatError(f"unsupported schema_version {version}")
    if "graph_id" not in obj or "input_region" not in obj or "bounds" not in obj:
        raise CertificateFormatError("certificate needs graph_id, input_region, bounds")
    leaves = []
    for leaf_obj in obj.get("leaves", []):
        if not isinstance(leaf_obj, dict) or "region" not in leaf_obj:
            raise CertificateFormatError("leaf needs a region")
        leaves.append(
            Leaf(
                region=_parse_region(leaf_obj["region"]),
                claimed_lower_bound=canon_float(leaf_obj.get("claimed_lower_bound", 0.0)),
                threshold=canon_float(leaf_obj.get("threshold", 0.0)),
                bounds=_parse_bounds_map(leaf_obj.get("bounds", {})),
            )
        )
    return Certificate(
        graph_id=str(obj["graph_id"]),
        input_region=_parse_region(obj["input_region"]),
        bounds=_parse_bounds_map(obj["bounds"]),
        leaves=tuple(leaves),
    )


def _emit_region(region: dict[int, tuple[tuple[float, ...], tuple[float, ...]]]) -> dict:
    return {
        str(node_id): {
            "lo": [emit_float(v) for v in lo],
            "hi": [emit_float(v) for v in hi],
        }
        for node_id, (lo, hi) in sorted(region.items())
    }


def _emit_node_bounds(nb: NodeBounds) -> dict:
    out: dict[str, Any] = {
        "lo": [emit_float(v) for v in nb.lo],
        "hi": [emit_float(v) for v in nb.hi],
    }
    if nb.has_affine:
        out["aL"] = [[emit_float(v) for v in row] for row in nb.a_lower]
        out["bL"] = [emit_float(v) for v in nb.b_lower]
        out["aU"] = [[emit_float(v) for v in row] for row in nb.a_upper]
        out["bU"] = [emit_float(v) for v in nb.b_upper]
    if nb.alpha is not None:
        out["alpha"] = [emit_float(v) for v in nb.alpha]
    if nb.beta is not None:
        out["beta"] = list(nb.beta)
    return out


def serialize_certificate(cert: Certificate) -> bytes:
    obj: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "graph_id": cert.graph_id,
        "input_region": _emit_region(cert.input_region),
        "bounds": {str(i): _emit_node_bounds(nb) for i, nb in sorted(cert.bounds.items())},
    }
    if cert.leaves:
        obj["leaves"] = [
            {
                "region": _emit_region(leaf.region),
                "claimed_lower_bound": emit_float(leaf.claimed_lower_bound),
                "threshold": emit_float(leaf.threshold),
                "bounds": {str(i): _emit_node_bounds(nb) for i, nb in sorted(leaf.bounds.items())},
            }
            for leaf in cert.leaves
        ]
    return json.dumps(obj, sort_keys=True, indent=1).encode()
