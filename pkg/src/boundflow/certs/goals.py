"""Goal reductions discharged from certified bounds.

Each check turns an output enclosure (or a set of term enclosures) into a
yes/no property verdict: classifier margins, sufficient-UNSAT refutation
of linear property clauses, Lyapunov sign conditions, residual tolerance,
and branch-and-bound leaf coverage.  Margin and UNSAT use strict
inequalities; Lyapunov takes an explicit non-strict margin rho.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class Clause:
    """Conjunction of linear constraints C y <= d over the output vector."""

    c: tuple[tuple[float, ...], ...]
    d: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.c) != len(self.d):
            raise ValueError("clause row count mismatch")


@dataclass(frozen=True)
class PropertySpec:
    """Disjunction of clauses; a counterexample satisfies some clause."""

    clauses: tuple[Clause, ...]
    output_size: int

    def __post_init__(self) -> None:
        for clause in self.clauses:
            for row in clause.c:
                if len(row) != self.output_size:
                    raise ValueError(f"clause row width {len(row)} != output size {self.output_size}")


RowLowerBound = Callable[[np.ndarray, float], float]
"""Certified lower bound of (c . y - d) over the verified region."""


def row_bound_from_box(out_lo: Sequence[float], out_hi: Sequence[float]) -> RowLowerBound:
    lo = np.asarray(out_lo, dtype=float)
    hi = np.asarray(out_hi, dtype=float)

    def bound(c: np.ndarray, d: float) -> float:
        return float(np.maximum(c, 0.0) @ lo - np.maximum(-c, 0.0) @ hi - d)

    return bound


def check_unsat(prop: PropertySpec, row_lower_bound: RowLowerBound) -> str:
    """"safe" iff every clause is refuted by some strictly positive row bound.

    Sound but incomplete: anything not refuted is "unknown", never "sat".
    """
    for clause in prop.clauses:
        refuted = False
        for row, d in zip(clause.c, clause.d):
            if row_lower_bound(np.asarray(row, dtype=float), float(d)) > 0.0:
                refuted = True
                break
        if not refuted:
            return "unknown"
    return "safe"


def check_margin(out_lo: Sequence[float], out_hi: Sequence[float], label: int) -> bool:
    """Strict logit-margin certificate: lower(z_label) > max upper(z_other)."""
    k = len(out_lo)
    if not 0 <= label < k:
        raise ValueError(f"label {label} out of range for {k} logits")
    if k == 1:
        return True
    other_max = max(h for i, h in enumerate(out_hi) if i != label)
    return out_lo[label] > other_max


def margin_property(label: int, num_classes: int) -> PropertySpec:
    """Misclassification expressed as a property: some other logit >= z_label."""
    clauses = []
    for k in range(num_classes):
        if k == label:
            continue
        row = [0.0] * num_classes
        row[label] = 1.0
        row[k] = -1.0
        clauses.append(Clause(c=((tuple(row)),), d=(0.0,)))
    return PropertySpec(clauses=tuple(clauses), output_size=num_classes)


def check_lyapunov(v_bounds: tuple[float, float], vdot_bounds: tuple[float, float],
                   rho: float = 0.0) -> bool:
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    return v_bounds[0] >= 0.0 and vdot_bounds[1] <= -rho


Term = tuple  # ("lin", coeff, name) | ("bil", coeff, name_a, name_b)


def residual_interval(term_bounds: dict[str, tuple[float, float]],
                      combiner: Sequence[Term]) -> tuple[float, float]:
    """Interval of a linear/bilinear residual expression over named terms."""
    lo = 0.0
    hi = 0.0
    for term in combiner:
        if term[0] == "lin":
            _, coeff, name = term
            a, b = term_bounds[name]
            cands = (coeff * a, coeff * b)
            lo += min(cands)
            hi += max(cands)
        elif term[0] == "bil":
            _, coeff, name_a, name_b = term
            a_lo, a_hi = term_bounds[name_a]
            b_lo, b_hi = term_bounds[name_b]
            prods = [x * y for x in (a_lo, a_hi) for y in (b_lo, b_hi)]
            cands = (coeff * min(prods), coeff * max(prods))
            lo += min(cands)
            hi += max(cands)
        else:
            raise ValueError(f"unknown residual term {term!r}")
    return lo, hi


def check_residual(term_bounds: dict[str, tuple[float, float]],
                   combiner: Sequence[Term], eps: float) -> bool:
    lo, hi = residual_interval(term_bounds, combiner)
    return -eps <= lo and hi <= eps


_MAX_COVER_DIMS = 16
_MAX_COVER_CELLS = 1 << 20


class CoverageUnsupported(ValueError):
    """Leaf-coverage geometry outside the supported desk-scale regime."""


def check_leaves(
    root: tuple[Sequence[float], Sequence[float]],
    leaves: Sequence[tuple[Sequence[float], Sequence[float]]],
    leaf_verdicts: Sequence[bool],
) -> tuple[bool, str]:
    """Branch-and-bound leaf validation: coverage plus per-leaf goal results.

    Boxes are closed and axis-aligned; coverage is decided exactly on the
    elementary-cell decomposition induced by all leaf boundaries.
    """
    root_lo = [float(v) for v in root[0]]
    root_hi = [float(v) for v in root[1]]
    dims = len(root_lo)
    if dims > _MAX_COVER_DIMS:
        raise CoverageUnsupported(f"coverage-check-unsupported: {dims} dims > {_MAX_COVER_DIMS}")
    if len(leaves) == 0:
        return False, "coverage: no leaves"
    if len(leaf_verdicts) != len(leaves):
        raise ValueError("one verdict per leaf required")

    for idx, (lo, hi) in enumerate(leaves):
        if len(lo) != dims or len(hi) != dims:
            raise ValueError(f"leaf {idx} has wrong dimension")
        for d in range(dims):
            if lo[d] > hi[d]:
                raise ValueError(f"leaf {idx} has lo > hi in dim {d}")
            if lo[d] < root_lo[d] - 0.0 or hi[d] > root_hi[d] + 0.0:
                return False, f"leaf {idx} exceeds the root region in dim {d}"

    for idx, ok in enumerate(leaf_verdicts):
        if not ok:
            return False, f"per-leaf: leaf {idx} failed its goal check"

    cuts: list[list[float]] = []
    n_cells = 1
    for d in range(dims):
        coords = {root_lo[d], root_hi[d]}
        for lo, hi in leaves:
            if root_lo[d] < lo[d] < root_hi[d]:
                coords.add(float(lo[d]))
            if root_lo[d] < hi[d] < root_hi[d]:
                coords.add(float(hi[d]))
        axis = sorted(coords)
        cuts.append(axis)
        n_cells *= max(1, len(axis) - 1)
        if n_cells > _MAX_COVER_CELLS:
            raise CoverageUnsupported("coverage-check-unsupported: too many elementary cells")

    for cell in itertools.product(*[range(len(axis) - 1) for axis in cuts]):
        covered = False
        for lo, hi in leaves:
            inside = True
            for d, ci in enumerate(cell):
                a, b = cuts[d][ci], cuts[d][ci + 1]
                if not (lo[d] <= a and b <= hi[d]):
                    inside = False
                    break
            if inside:
                covered = True
                break
        if not covered:
            gap = [(cuts[d][ci], cuts[d][ci + 1]) for d, ci in enumerate(cell)]
            return False, f"coverage: uncovered cell {gap}"
    return True, "ok"

