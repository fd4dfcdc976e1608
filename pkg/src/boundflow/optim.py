"""Shape-preserving optimizer steps on parameter packs.

Steps are pure: they take a store plus a matching gradient pack and return
a fresh store (and state, for Adam).  Domain-generic so the training demo
can run entirely under the bit-level binary32 domain.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import ParamStore
from .shapes import TensorValue


def _check_pack(params: ParamStore, grads) -> None:
    if len(grads) != len(params):
        raise ValueError("gradient pack size does not match parameter store")
    for (name, value), g in zip(params.items(), grads):
        if g.shape != value.shape:
            raise ValueError(f"gradient for {name!r} has shape {g.shape}, expected {value.shape}")


def sgd_step(params: ParamStore, grads, lr: float, dom=None) -> ParamStore:
    from .scalars import RealRef

    dom = dom or RealRef
    _check_pack(params, grads)
    lr_v = dom.from_float(lr)
    new_values = []
    for (_, theta), g in zip(params.items(), grads):
        new_values.append(
            TensorValue(theta.shape, tuple(dom.sub(t, dom.mul(lr_v, gv)) for t, gv in zip(theta.data, g.data)))
        )
    return params.replace_values(new_values)


@dataclass(frozen=True)
class AdamState:
    step: int
    m: tuple[TensorValue, ...]
    v: tuple[TensorValue, ...]


def adam_init(params: ParamStore, dom=None) -> AdamState:
    from .scalars import RealRef

    dom = dom or RealRef
    zeros = tuple(
        TensorValue(t.shape, (dom.zero(),) * t.shape.size) for t in params.values()
    )
    return AdamState(step=0, m=zeros, v=zeros)


def adam_step(
    params: ParamStore,
    grads,
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    dom=None,
) -> tuple[ParamStore, AdamState]:
    from .scalars import RealRef

    dom = dom or RealRef
    _check_pack(params, grads)
    t = state.step + 1
    b1 = dom.from_float(beta1)
    b2 = dom.from_float(beta2)
    c1 = dom.from_float(1.0 - beta1)
    c2 = dom.from_float(1.0 - beta2)
    bias1 = dom.from_float(1.0 - beta1 ** t)
    bias2 = dom.from_float(1.0 - beta2 ** t)
    lr_v = dom.from_float(lr)
    eps_v = dom.from_float(eps)

    new_params = []
    new_m = []
    new_v = []
    for (_, theta), g, m_t, v_t in zip(params.items(), grads, state.m, state.v):
        md = []
        vd = []
        pd = []
        for th, gv, m0, v0 in zip(theta.data, g.data, m_t.data, v_t.data):
            m1 = dom.add(dom.mul(b1, m0), dom.mul(c1, gv))
            v1 = dom.add(dom.mul(b2, v0), dom.mul(c2, dom.mul(gv, gv)))
            m_hat = dom.div(m1, bias1)
            v_hat = dom.div(v1, bias2)
            denom = dom.add(dom.sqrt(v_hat), eps_v)
            pd.append(dom.sub(th, dom.mul(lr_v, dom.div(m_hat, denom))))
            md.append(m1)
            vd.append(v1)
        new_params.append(TensorValue(theta.shape, tuple(pd)))
        new_m.append(TensorValue(theta.shape, tuple(md)))
        new_v.append(TensorValue(theta.shape, tuple(vd)))
    return params.replace_values(new_params), AdamState(t, tuple(new_m), tuple(new_v))
