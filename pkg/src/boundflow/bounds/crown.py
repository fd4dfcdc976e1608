"""Affine bound propagation (CROWN style) over the graph IR.

Every node gets a pair of affine forms in the flattened graph input,
lower(x) <= v(x) <= upper(x) over the certified input box.  Affine ops
compose exactly through per-coefficient sign routing; ReLU/tanh use the
line relaxations from relax.py with intervals taken from the plain IBP
pre-activation boxes (the same boxes a certificate supplies); every other
op falls back to constant forms from its own IBP box, trading tightness
for soundness.

The shared sweep takes an optional ``quantize`` hook applied to every
stored numeric artifact; the certificate emitter and checker run the same
sweep with binary32-grid quantization so replay is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..graph import (
    Add,
    Exp,
    Flatten,
    Input,
    Linear,
    MatMul,
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
    WellTypedGraph,
)
from ..shapes import TensorValue
from .boxes import REAL_BACKING, BoxEntry
from .ibp import ibp_step
from .relax import LinePair, PhaseError, constant_lines, relu_relax, tanh_relax


@dataclass(frozen=True)
class AffineForm:
    a: np.ndarray  # (size, input_size)
    b: np.ndarray  # (size,)

    def concretize_min(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        a_pos = np.maximum(self.a, 0.0)
        a_neg = np.maximum(-self.a, 0.0)
        return a_pos @ lo - a_neg @ hi + self.b

    def concretize_max(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        a_pos = np.maximum(self.a, 0.0)
        a_neg = np.maximum(-self.a, 0.0)
        return a_pos @ hi - a_neg @ lo + self.b


@dataclass(frozen=True)
class AffBounds:
    lower: AffineForm
    upper: AffineForm


@dataclass
class RelaxParams:
    """Per-ReLU-node relaxation choices: alpha in [0,1], beta in {-1,0,1}."""

    alpha: dict[int, np.ndarray] = field(default_factory=dict)
    beta: dict[int, np.ndarray] = field(default_factory=dict)

    def alpha_for(self, node_id: int, size: int) -> np.ndarray:
        arr = self.alpha.get(node_id)
        if arr is None:
            return np.zeros(size)
        if len(arr) != size:
            raise ValueError(f"alpha array for node {node_id} has length {len(arr)}, want {size}")
        return np.asarray(arr, dtype=float)

    def beta_for(self, node_id: int, size: int) -> np.ndarray:
        arr = self.beta.get(node_id)
        if arr is None:
            return np.zeros(size, dtype=int)
        if len(arr) != size:
            raise ValueError(f"beta array for node {node_id} has length {len(arr)}, want {size}")
        return np.asarray(arr, dtype=int)


@dataclass
class NodeCrown:
    box_lo: np.ndarray
    box_hi: np.ndarray
    forms: AffBounds


def _input_layout(g: WellTypedGraph) -> tuple[dict[int, int], int]:
    offsets = {}
    total = 0
    for node_id in g.input_ids:
        offsets[node_id] = total
        total += g.node(node_id).out_shape.size
    return offsets, total


def _entry_from_arrays(shape, lo: np.ndarray, hi: np.ndarray) -> BoxEntry:
    return BoxEntry(TensorValue(shape, tuple(lo.tolist())), TensorValue(shape, tuple(hi.tolist())))


def node_lines(kind, node_id: int, pre_lo: np.ndarray, pre_hi: np.ndarray,
               own_lo: np.ndarray, own_hi: np.ndarray, relax: RelaxParams) -> list[LinePair]:
    """Scalar relaxation lines for one elementwise nonlinearity node."""
    n = len(pre_lo)
    if isinstance(kind, Relu):
        alphas = relax.alpha_for(node_id, n)
        betas = relax.beta_for(node_id, n)
        try:
            return [relu_relax(pre_lo[i], pre_hi[i], float(alphas[i]), int(betas[i])) for i in range(n)]
        except PhaseError as exc:
            exc.node_id = node_id
            raise
    if isinstance(kind, Tanh):
        return [tanh_relax(pre_lo[i], pre_hi[i]) for i in range(n)]
    # sigmoid/exp and anything without a dedicated relaxation: constant lines
    # from the node's own interval enclosure
    return [constant_lines(own_lo[i], own_hi[i]) for i in range(n)]


def _compose_sign_split(j: np.ndarray, bias: np.ndarray, p: AffBounds) -> AffBounds:
    """Forms of y = J v + bias given forms of v (rows routed by sign of J)."""
    j_pos = np.maximum(j, 0.0)
    j_neg = np.maximum(-j, 0.0)
    lower = AffineForm(
        j_pos @ p.lower.a - j_neg @ p.upper.a,
        j_pos @ p.lower.b - j_neg @ p.upper.b + bias,
    )
    upper = AffineForm(
        j_pos @ p.upper.a - j_neg @ p.lower.a,
        j_pos @ p.upper.b - j_neg @ p.lower.b + bias,
    )
    return AffBounds(lower, upper)


def _compose_lines(lines: list[LinePair], p: AffBounds) -> AffBounds:
    n = len(lines)
    in_size = p.lower.a.shape[1]
    lo_a = np.zeros((n, in_size))
    lo_b = np.zeros(n)
    hi_a = np.zeros((n, in_size))
    hi_b = np.zeros(n)
    for i, pair in enumerate(lines):
        s, b = pair.lower.slope, pair.lower.intercept
        src = p.lower if s >= 0 else p.upper
        lo_a[i] = s * src.a[i]
        lo_b[i] = s * src.b[i] + b
        s, b = pair.upper.slope, pair.upper.intercept
        src = p.upper if s >= 0 else p.lower
        hi_a[i] = s * src.a[i]
        hi_b[i] = s * src.b[i] + b
    return AffBounds(AffineForm(lo_a, lo_b), AffineForm(hi_a, hi_b))


def _const_forms(lo: np.ndarray, hi: np.ndarray, in_size: int) -> AffBounds:
    n = len(lo)
    zeros = np.zeros((n, in_size))
    return AffBounds(AffineForm(zeros, np.asarray(lo, dtype=float)),
                     AffineForm(zeros.copy(), np.asarray(hi, dtype=float)))


def _linear_jacobian(kind: Linear, params_by_name) -> tuple[np.ndarray, np.ndarray]:
    w = np.array(params_by_name[kind.weight_key].data, dtype=float).reshape(kind.out_dim, kind.in_dim)
    b = np.array(params_by_name[kind.bias_key].data, dtype=float)
    return w, b


def _is_point_const(p: AffBounds) -> bool:
    return (
        not p.lower.a.any()
        and not p.upper.a.any()
        and np.array_equal(p.lower.b, p.upper.b)
    )


def crown_sweep(
    g: WellTypedGraph,
    params_by_name: dict[str, TensorValue],
    input_entry: dict[int, BoxEntry],
    relax: RelaxParams | None = None,
    quantize=None,
) -> dict[int, NodeCrown]:
    """IBP boxes plus affine forms for every node, in one id-order sweep.

    With ``quantize`` set, every stored box endpoint and form coefficient
    passes through it and later nodes consume the quantized values; this is
    the replayable step semantics shared with the certificate checker.
    """
    relax = relax or RelaxParams()
    q = quantize if quantize is not None else (lambda arr: arr)
    offsets, in_size = _input_layout(g)

    out: dict[int, NodeCrown] = {}
    for node in g.nodes:
        box_lo, box_hi = crown_step_box(g, node, out, input_entry, params_by_name, q)
        forms = crown_step_forms(
            g, node, out, box_lo, box_hi, relax, params_by_name, offsets, in_size, q
        )
        out[node.id] = NodeCrown(box_lo=box_lo, box_hi=box_hi, forms=forms)
    return out


def crown_step_box(g, node, computed: dict[int, NodeCrown], input_entry,
                   params_by_name, q) -> tuple[np.ndarray, np.ndarray]:
    """One node's interval step (the same ibp_step the checker replays)."""
    kind = node.kind
    if isinstance(kind, Input):
        entry = input_entry[node.id]
        return (
            q(np.array([float(v) for v in entry.lower.data])),
            q(np.array([float(v) for v in entry.upper.data])),
        )
    if isinstance(kind, Param):
        vals = q(np.array([float(v) for v in params_by_name[kind.key].data]))
        return vals, vals.copy()
    parent_entries = [
        _entry_from_arrays(g.node(p).out_shape, computed[p].box_lo, computed[p].box_hi)
        for p in node.parents
    ]
    stepped = ibp_step(kind, parent_entries, node.out_shape, REAL_BACKING, params_by_name)
    return (
        q(np.array(stepped.lower.data, dtype=float)),
        q(np.array(stepped.upper.data, dtype=float)),
    )


def crown_step_forms(g, node, computed: dict[int, NodeCrown], box_lo, box_hi,
                     relax: RelaxParams, params_by_name, offsets, in_size, q) -> AffBounds:
    """One node's affine step; shared verbatim by the sweep and the checker."""
    kind = node.kind
    size = node.out_shape.size
    if isinstance(kind, Input):
        a = np.zeros((size, in_size))
        off = offsets[node.id]
        for i in range(size):
            a[i, off + i] = 1.0
        forms = AffBounds(AffineForm(a, np.zeros(size)), AffineForm(a.copy(), np.zeros(size)))
    elif isinstance(kind, Param):
        zeros = np.zeros((size, in_size))
        forms = AffBounds(AffineForm(zeros, box_lo.copy()), AffineForm(zeros.copy(), box_hi.copy()))
    elif isinstance(kind, Linear) and node.out_shape.rank == 1:
        w, b = _linear_jacobian(kind, params_by_name)
        forms = _compose_sign_split(w, b, computed[node.parents[0]].forms)
    elif isinstance(kind, MatMul) and _is_point_const(computed[node.parents[0]].forms) and g.node(node.parents[1]).out_shape.rank == 1:
        # constant matrix times vector: exact affine composition
        a_mat = computed[node.parents[0]].box_lo.reshape(g.node(node.parents[0]).out_shape.dims)
        forms = _compose_sign_split(a_mat, np.zeros(size), computed[node.parents[1]].forms)
    elif isinstance(kind, Add):
        p1, p2 = computed[node.parents[0]].forms, computed[node.parents[1]].forms
        forms = AffBounds(
            AffineForm(p1.lower.a + p2.lower.a, p1.lower.b + p2.lower.b),
            AffineForm(p1.upper.a + p2.upper.a, p1.upper.b + p2.upper.b),
        )
    elif isinstance(kind, Sub):
        p1, p2 = computed[node.parents[0]].forms, computed[node.parents[1]].forms
        forms = AffBounds(
            AffineForm(p1.lower.a - p2.upper.a, p1.lower.b - p2.upper.b),
            AffineForm(p1.upper.a - p2.lower.a, p1.upper.b - p2.lower.b),
        )
    elif isinstance(kind, MulElem) and (
        _is_point_const(computed[node.parents[0]].forms) or _is_point_const(computed[node.parents[1]].forms)
    ):
        if _is_point_const(computed[node.parents[0]].forms):
            c = computed[node.parents[0]].box_lo
            other = computed[node.parents[1]].forms
        else:
            c = computed[node.parents[1]].box_lo
            other = computed[node.parents[0]].forms
        forms = _compose_sign_split(np.diag(c), np.zeros(size), other)
    elif isinstance(kind, (ReduceSum, ReduceMean)):
        parent_size = g.node(node.parents[0]).out_shape.size
        row = np.ones((1, parent_size))
        if isinstance(kind, ReduceMean):
            row /= parent_size
        forms = _compose_sign_split(row, np.zeros(1), computed[node.parents[0]].forms)
    elif isinstance(kind, (Reshape, Flatten)):
        forms = computed[node.parents[0]].forms
    elif isinstance(kind, (Relu, Tanh, Sigmoid, Exp)):
        parent = computed[node.parents[0]]
        lines = node_lines(kind, node.id, parent.box_lo, parent.box_hi, box_lo, box_hi, relax)
        forms = _compose_lines(lines, parent.forms)
    else:
        # softmax, mse_loss, general mul_elem/matmul, batched linear:
        # constant forms from the node's own interval enclosure
        forms = _const_forms(box_lo, box_hi, in_size)

    return AffBounds(
        AffineForm(q(forms.lower.a), q(forms.lower.b)),
        AffineForm(q(forms.upper.a), q(forms.upper.b)),
    )


def crown_forward(
    g: WellTypedGraph,
    params_by_name: dict[str, TensorValue],
    input_entry: dict[int, BoxEntry],
    relax: RelaxParams | None = None,
) -> tuple[dict[int, AffBounds], dict[int, tuple[np.ndarray, np.ndarray]]]:
    """Affine forms per node plus concretized boxes intersected with IBP."""
    sweep = crown_sweep(g, params_by_name, input_entry, relax)
    offsets, in_size = _input_layout(g)
    lo = np.zeros(in_size)
    hi = np.zeros(in_size)
    for node_id, off in offsets.items():
        n = g.node(node_id).out_shape.size
        lo[off:off + n] = sweep[node_id].box_lo
        hi[off:off + n] = sweep[node_id].box_hi

    forms = {i: nc.forms for i, nc in sweep.items()}
    boxes = {}
    for i, nc in sweep.items():
        c_lo = nc.forms.lower.concretize_min(lo, hi)
        c_hi = nc.forms.upper.concretize_max(lo, hi)
        boxes[i] = (np.maximum(nc.box_lo, c_lo), np.minimum(nc.box_hi, c_hi))
    return forms, boxes


def crown_backward(
    g: WellTypedGraph,
    params_by_name: dict[str, TensorValue],
    input_entry: dict[int, BoxEntry],
    objective: np.ndarray,
    relax: RelaxParams | None = None,
    sweep: dict[int, NodeCrown] | None = None,
) -> float:
    """Certified lower bound on min over the box of <objective, output>.

    Back-substitutes the objective through the graph in reverse id order,
    choosing each node's lower or upper relaxation line by coefficient
    sign, then concretizes the resulting input-affine function.
    """
    relax = relax or RelaxParams()
    if sweep is None:
        sweep = crown_sweep(g, params_by_name, input_entry, relax)
    objective = np.asarray(objective, dtype=float)
    out_size = g.output_shape.size
    if objective.shape != (out_size,):
        raise ValueError(f"objective must have shape ({out_size},)")

    lam: dict[int, np.ndarray] = {g.output_id: objective.copy()}
    const = 0.0
    input_lam: dict[int, np.ndarray] = {}

    for node in reversed(g.nodes):
        coeff = lam.pop(node.id, None)
        if coeff is None or not coeff.any():
            continue
        kind = node.kind

        def push(parent_id: int, contribution: np.ndarray) -> None:
            if parent_id in lam:
                lam[parent_id] = lam[parent_id] + contribution
            else:
                lam[parent_id] = contribution

        if isinstance(kind, Input):
            if node.id in input_lam:
                input_lam[node.id] = input_lam[node.id] + coeff
            else:
                input_lam[node.id] = coeff
        elif isinstance(kind, Param):
            const += coeff @ np.array([float(v) for v in params_by_name[kind.key].data])
        elif isinstance(kind, Linear) and node.out_shape.rank == 1:
            w, b = _linear_jacobian(kind, params_by_name)
            const += coeff @ b
            push(node.parents[0], coeff @ w)
        elif isinstance(kind, MatMul) and _is_point_const(sweep[node.parents[0]].forms) and g.node(node.parents[1]).out_shape.rank == 1:
            a_mat = sweep[node.parents[0]].box_lo.reshape(g.node(node.parents[0]).out_shape.dims)
            push(node.parents[1], coeff @ a_mat)
        elif isinstance(kind, Add):
            push(node.parents[0], coeff)
            push(node.parents[1], coeff.copy())
        elif isinstance(kind, Sub):
            push(node.parents[0], coeff)
            push(node.parents[1], -coeff)
        elif isinstance(kind, MulElem) and (
            _is_point_const(sweep[node.parents[0]].forms) or _is_point_const(sweep[node.parents[1]].forms)
        ):
            if _is_point_const(sweep[node.parents[0]].forms):
                c = sweep[node.parents[0]].box_lo
                other = node.parents[1]
            else:
                c = sweep[node.parents[1]].box_lo
                other = node.parents[0]
            push(other, coeff * c)
        elif isinstance(kind, (ReduceSum, ReduceMean)):
            parent_size = g.node(node.parents[0]).out_shape.size
            scale = coeff[0] / parent_size if isinstance(kind, ReduceMean) else coeff[0]
            push(node.parents[0], np.full(parent_size, scale))
        elif isinstance(kind, (Reshape, Flatten)):
            push(node.parents[0], coeff)
        elif isinstance(kind, (Relu, Tanh, Sigmoid, Exp)):
            parent = sweep[node.parents[0]]
            own = sweep[node.id]
            lines = node_lines(kind, node.id, parent.box_lo, parent.box_hi,
                               own.box_lo, own.box_hi, relax)
            parent_coeff = np.zeros(len(coeff))
            for i, pair in enumerate(lines):
                line = pair.lower if coeff[i] >= 0 else pair.upper
                parent_coeff[i] = coeff[i] * line.slope
                const += coeff[i] * line.intercept
            push(node.parents[0], parent_coeff)
        else:
            # constant fallback: close the term against the node's own box
            own = sweep[node.id]
            const += float(np.maximum(coeff, 0.0) @ own.box_lo - np.maximum(-coeff, 0.0) @ own.box_hi)

    bound = const
    for node_id, coeff in input_lam.items():
        entry = input_entry[node_id]
        lo = np.array([float(v) for v in entry.lower.data])
        hi = np.array([float(v) for v in entry.upper.data])
        bound += float(np.maximum(coeff, 0.0) @ lo - np.maximum(-coeff, 0.0) @ hi)
    return float(bound)


def f32_quantizer(arr: np.ndarray) -> np.ndarray:
    """Snap every entry to the binary32 grid (nearest-even), keeping float64 carrier."""
    return np.asarray(arr, dtype=np.float32).astype(np.float64)


def input_layout(g: WellTypedGraph) -> tuple[dict[int, int], int]:
    """Offsets of each input node in the flattened input vector, plus its size."""
    return _input_layout(g)
