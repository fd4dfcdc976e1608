"""Certificate parsing, replay checking, and goal reductions."""

from .checker import (
    RULE_BOUND,
    RULE_GOAL,
    RULE_PHASE,
    RULE_SCHEMA,
    RULE_TOPO,
    CheckReport,
    check_certificate,
    make_certificate,
)
from .goals import (
    Clause,
    CoverageUnsupported,
    PropertySpec,
    check_leaves,
    check_lyapunov,
    check_margin,
    check_residual,
    check_unsat,
    margin_property,
    residual_interval,
    row_bound_from_box,
)
from .schema import (
    Certificate,
    CertificateFormatError,
    Leaf,
    NodeBounds,
    canon_float,
    parse_certificate,
    serialize_certificate,
)

__all__ = [
    "Certificate",
    "CertificateFormatError",
    "CheckReport",
    "Clause",
    "CoverageUnsupported",
    "Leaf",
    "NodeBounds",
    "PropertySpec",
    "RULE_BOUND",
    "RULE_GOAL",
    "RULE_PHASE",
    "RULE_SCHEMA",
    "RULE_TOPO",
    "canon_float",
    "check_certificate",
    "check_leaves",
    "check_lyapunov",
    "check_margin",
    "check_residual",
    "check_unsat",
    "make_certificate",
    "margin_property",
    "parse_certificate",
    "residual_interval",
    "row_bound_from_box",
    "serialize_certificate",
]
