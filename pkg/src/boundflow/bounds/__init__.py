"""Sound bound propagation over the graph IR: interval (IBP), affine
(CROWN forward/backward with alpha/beta ReLU relaxations), and the
scalar-input first-derivative pass."""

from .boxes import B32_BACKING, BACKINGS, REAL_BACKING, BoxEntry, box_contains, box_to_floats
from .crown import (
    AffBounds,
    AffineForm,
    NodeCrown,
    RelaxParams,
    crown_backward,
    crown_forward,
    crown_step_box,
    crown_step_forms,
    crown_sweep,
    f32_quantizer,
    input_layout,
    node_lines,
)
from .deriv import DerivUnsupported, deriv_ibp1
from .ibp import BoundError, ibp_step, run_ibp
from .relax import Line, LinePair, PhaseError, constant_lines, relu_relax, tanh_relax

__all__ = [
    "AffBounds",
    "AffineForm",
    "B32_BACKING",
    "BACKINGS",
    "BoundError",
    "BoxEntry",
    "DerivUnsupported",
    "Line",
    "LinePair",
    "NodeCrown",
    "PhaseError",
    "REAL_BACKING",
    "RelaxParams",
    "box_contains",
    "box_to_floats",
    "constant_lines",
    "crown_backward",
    "crown_forward",
    "crown_step_box",
    "crown_step_forms",
    "crown_sweep",
    "deriv_ibp1",
    "f32_quantizer",
    "ibp_step",
    "input_layout",
    "node_lines",
    "relu_relax",
    "run_ibp",
    "tanh_relax",
]
