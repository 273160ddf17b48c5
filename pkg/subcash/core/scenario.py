"""Scenario spaces, positions, and probability / sub-probability weights.

A position on a space of n atoms is a plain float vector of length n; the
all-ones vector is the numeraire. Weight types validate once at construction
and hold read-only arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

import config
from ..errors import ValidationError

Position = np.ndarray


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def as_vector(values, *, name: str = "position", size: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-d float vector, optionally of a given length."""
    array = np.array(values, dtype=float)
    if array.ndim == 0:
        array = array.reshape(1)
    if array.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {array.shape}")
    if array.size == 0:
        raise ValidationError(f"{name} must not be empty")
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{name} has non-finite entries")
    if size is not None and array.size != size:
        raise ValidationError(f"{name} has length {array.size}, expected {size}")
    return _frozen(array)


@dataclass(frozen=True)
class ScenarioSpace:
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise ValidationError("a scenario space needs at least one atom")
        if len(set(labels)) != len(labels):
            raise ValidationError(f"atom labels must be distinct: {list(labels)}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of_size(cls, n: int) -> "ScenarioSpace":
        return cls(tuple(f"w{i}" for i in range(n)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def ones(self) -> np.ndarray:
        return np.ones(self.size)


def space_size(space: "ScenarioSpace | int") -> int:
    if isinstance(space, ScenarioSpace):
        return space.size
    n = int(space)
    if n < 1:
        raise ValidationError(f"space size must be positive, got {n}")
    return n


def as_position(values, space: ScenarioSpace | int | None = None) -> Position:
    size = None if space is None else space_size(space)
    return as_vector(values, name="position", size=size)


@dataclass(frozen=True, eq=False)
class ProbabilityWeights:
    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = as_vector(self.weights, name="probability weights")
        if np.any(weights < 0.0):
            raise ValidationError(f"probability weights must be nonnegative: {weights.tolist()}")
        total = math.fsum(weights)
        if abs(total - 1.0) > config.TOLERANCE_CONFIG["probability"]:
            raise ValidationError(f"probability weights must sum to 1, got {total!r}")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, n: int) -> "ProbabilityWeights":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def normalized(cls, values: Sequence[float] | np.ndarray) -> "ProbabilityWeights":
        array = np.asarray(values, dtype=float)
        return cls(array / math.fsum(array))

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def mass(self) -> float:
        return 1.0

    def close_to(self, other: "ProbabilityWeights | np.ndarray", tol: float | None = None) -> bool:
        tol = config.TOLERANCE_CONFIG["probability"] if tol is None else tol
        other_weights = weights_of(other)
        if other_weights.size != self.size:
            return False
        return bool(np.max(np.abs(self.weights - other_weights)) <= tol)


@dataclass(frozen=True, eq=False)
class SubProbability:
    weights: np.ndarray
    mass: float = field(init=False)

    def __post_init__(self) -> None:
        weights = as_vector(self.weights, name="sub-probability weights")
        if np.any(weights < 0.0):
            raise ValidationError(f"sub-probability weights must be nonnegative: {weights.tolist()}")
        total = math.fsum(weights)
        tol = config.TOLERANCE_CONFIG["mass"]
        if total > 1.0 + tol:
            raise ValidationError(f"sub-probability mass must not exceed 1, got {total!r}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "mass", min(total, 1.0))

    @classmethod
    def zero(cls, n: int) -> "SubProbability":
        return cls(np.zeros(n))

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def normalize(self) -> tuple[float, ProbabilityWeights | None]:
        """Split into (c, Q) with weights = c * Q; Q is None for the zero measure."""
        if self.mass <= 0.0:
            return 0.0, None
        return self.mass, ProbabilityWeights.normalized(self.weights)


def weights_of(q) -> np.ndarray:
    if isinstance(q, (ProbabilityWeights, SubProbability)):
        return q.weights
    return np.asarray(q, dtype=float)


def expectation(q: ProbabilityWeights | SubProbability | np.ndarray, x) -> float:
    """Pairing sum_i q_i x_i of a (sub-)probability with a position."""
    weights = weights_of(q)
    values = np.asarray(x, dtype=float)
    if weights.shape != values.shape:
        raise ValidationError(f"dimension mismatch: weights {weights.shape} vs position {values.shape}")
    return float(weights @ values)


def pos_neg_parts(x) -> tuple[Position, Position]:
    values = np.asarray(x, dtype=float)
    positive = np.where(values > 0.0, values, 0.0)
    negative = np.where(values < 0.0, -values, 0.0)
    return positive, negative
