"""Sound scalar line pairs for nonlinearities on a pre-activation interval.

A LinePair bounds one scalar function on [l, u]: lower(z) <= f(z) <=
upper(z) for every z in the interval.  Intercepts carry a small outward
slack so the bracketing survives binary64 evaluation of the lines
themselves; the slack is deterministic and far below every tightness
tolerance in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class PhaseError(ValueError):
    """A beta phase assertion conflicts with the pre-activation interval."""


@dataclass(frozen=True)
class Line:
    slope: float
    intercept: float

    def at(self, z: float) -> float:
        return self.slope * z + self.intercept


@dataclass(frozen=True)
class LinePair:
    lower: Line
    upper: Line


def _slack(*values: float) -> float:
    m = 1.0
    for v in values:
        a = abs(v)
        if a > m and not math.isinf(a):
            m = a
    return 1e-12 * m


def relu_relax(l: float, u: float, alpha: float = 0.0, beta: int = 0) -> LinePair:
    """Phase-aware ReLU relaxation.

    beta=-1 asserts the unit inactive (requires u <= 0), beta=+1 active
    (requires 0 <= l); beta=0 leaves the phase free: stable segments get
    exact lines, the crossing case gets the secant upper bound and the
    alpha-family lower bound (slope alpha through the origin).
    """
    if l > u:
        raise ValueError(f"invalid interval [{l}, {u}]")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0, 1]")
    if beta not in (-1, 0, 1):
        raise ValueError(f"beta {beta} outside {{-1, 0, 1}}")

    if beta == -1:
        if not u <= 0.0:
            raise PhaseError(f"beta=-1 requires u <= 0, got [{l}, {u}]")
        return LinePair(Line(0.0, 0.0), Line(0.0, 0.0))
    if beta == 1:
        if not 0.0 <= l:
            raise PhaseError(f"beta=+1 requires 0 <= l, got [{l}, {u}]")
        return LinePair(Line(1.0, 0.0), Line(1.0, 0.0))

    if u <= 0.0:
        return LinePair(Line(0.0, 0.0), Line(0.0, 0.0))
    if l >= 0.0:
        return LinePair(Line(1.0, 0.0), Line(1.0, 0.0))
    # crossing case: secant above, alpha-line below
    s_u = u / (u - l)
    b_u = -u * l / (u - l)
    return LinePair(Line(alpha, 0.0), Line(s_u, b_u + _slack(b_u, s_u * l, s_u * u)))


def tanh_relax(l: float, u: float) -> LinePair:
    """Sound tanh lines: secant/tangent on sign-stable intervals, constant
    endpoint lines across zero (loose but sound)."""
    if l > u:
        raise ValueError(f"invalid interval [{l}, {u}]")
    tl, tu = math.tanh(l), math.tanh(u)
    if l == u:
        eps = _slack(tl)
        return LinePair(Line(0.0, tl - eps), Line(0.0, tu + eps))
    if l >= 0.0:
        # concave region: secant below, midpoint tangent above
        secant = (tu - tl) / (u - l)
        m = 0.5 * (l + u)
        tm = math.tanh(m)
        tangent = 1.0 - tm * tm
        lo_b = tl - secant * l
        hi_b = tm - tangent * m
        return LinePair(
            Line(secant, lo_b - _slack(lo_b, secant * l, secant * u)),
            Line(tangent, hi_b + _slack(hi_b, tangent * l, tangent * u)),
        )
    if u <= 0.0:
        # convex region: midpoint tangent below, secant above
        secant = (tu - tl) / (u - l)
        m = 0.5 * (l + u)
        tm = math.tanh(m)
        tangent = 1.0 - tm * tm
        lo_b = tm - tangent * m
        hi_b = tl - secant * l
        return LinePair(
            Line(tangent, lo_b - _slack(lo_b, tangent * l, tangent * u)),
            Line(secant, hi_b + _slack(hi_b, secant * l, secant * u)),
        )
    # crossing zero: constant endpoint lines, sound by monotonicity
    eps = _slack(tl, tu)
    return LinePair(Line(0.0, tl - eps), Line(0.0, tu + eps))


def constant_lines(lo: float, hi: float) -> LinePair:
    """Fallback pair from an interval enclosure (slope-zero lines)."""
    return LinePair(Line(0.0, lo), Line(0.0, hi))
