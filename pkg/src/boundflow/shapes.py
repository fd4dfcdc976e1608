"""Shapes and dense row-major tensors.

A shape is a chain of dimension counts (``()`` is a scalar, ``(2, 3)`` a
2x3 matrix).  Tensor data lives in a flat row-major tuple whose length
always equals the shape's element count; every module downstream relies
on that invariant, so construction checks it eagerly.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from typing import Iterable, Sequence


class ShapeError(ValueError):
    """Raised for malformed shapes or shape/data length mismatches."""


@dataclass(frozen=True)
class Shape:
    """Chain of dimension counts. Every count must be >= 1."""

    dims: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        try:
            dims = tuple(operator.index(d) for d in self.dims)
        except TypeError as exc:
            raise ShapeError(f"dimension counts must be ints, got {self.dims}") from exc
        if any(d < 1 for d in dims):
            raise ShapeError(f"dimension counts must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @staticmethod
    def scalar() -> "Shape":
        return Shape(())

    @staticmethod
    def vector(n: int) -> "Shape":
        return Shape((n,))

    @staticmethod
    def matrix(m: int, n: int) -> "Shape":
        return Shape((m, n))

    @staticmethod
    def of(*dims: int) -> "Shape":
        return Shape(tuple(dims))

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    @property
    def rank(self) -> int:
        return len(self.dims)

    def is_scalar(self) -> bool:
        return not self.dims

    def __str__(self) -> str:
        return "scalar" if not self.dims else "[" + ",".join(map(str, self.dims)) + "]"


@dataclass(frozen=True)
class TensorValue:
    """Shape-carrying dense tensor; ``data`` is row-major, one entry per element.

    The scalar type is whatever the active domain uses (floats, interval
    pairs, 32-bit patterns); TensorValue never inspects it.
    """

    shape: Shape
    data: tuple

    def __post_init__(self) -> None:
        if len(self.data) != self.shape.size:
            raise ShapeError(
                f"data length {len(self.data)} does not match shape {self.shape} "
                f"(size {self.shape.size})"
            )

    @staticmethod
    def scalar(value) -> "TensorValue":
        return TensorValue(Shape.scalar(), (value,))

    @staticmethod
    def vector(values: Sequence) -> "TensorValue":
        return TensorValue(Shape.vector(len(values)), tuple(values))

    @staticmethod
    def of(shape: Shape, values: Iterable) -> "TensorValue":
        return TensorValue(shape, tuple(values))

    @staticmethod
    def filled(shape: Shape, value) -> "TensorValue":
        return TensorValue(shape, (value,) * shape.size)

    def item(self):
        if not self.shape.is_scalar():
            raise ShapeError(f"item() on non-scalar tensor of shape {self.shape}")
        return self.data[0]

    def index(self, multi_index: Sequence[int]):
        return self.data[flat_index(self.shape, multi_index)]


def flat_index(shape: Shape, multi_index: Sequence[int]) -> int:
    """Row-major flattening of a multi-index; bounds-checked."""
    if len(multi_index) != shape.rank:
        raise ShapeError(f"index rank {len(multi_index)} vs shape {shape}")
    flat = 0
    for i, n in zip(multi_index, shape.dims):
        if not 0 <= i < n:
            raise ShapeError(f"index {multi_index} out of bounds for shape {shape}")
        flat = flat * n + i
    return flat


def vec(t: TensorValue) -> tuple:
    """Flatten to the fixed row-major order."""
    return t.data


def unvec(shape: Shape, flat: Sequence) -> TensorValue:
    if len(flat) != shape.size:
        raise ShapeError(f"unvec: {len(flat)} values for shape {shape} (size {shape.size})")
    return TensorValue(shape, tuple(flat))


def dot(a: TensorValue, b: TensorValue) -> float:
    """Euclidean inner product of vec(a) and vec(b); shapes must match."""
    if a.shape != b.shape:
        raise ShapeError(f"dot: shape mismatch {a.shape} vs {b.shape}")
    return sum(x * y for x, y in zip(a.data, b.data))
