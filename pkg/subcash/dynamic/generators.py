"""BSDE generators g(step, y, z).

Generators are evaluated layer-wise on numpy arrays and must be pure. Rate
paths hold one value per lattice step; a single value is a constant path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ValidationError
from ..evaluation.checks import CheckReport


def _rate_path(values, name: str) -> np.ndarray:
    array = np.array(values, dtype=float).reshape(-1)
    if array.size == 0 or not np.all(np.isfinite(array)):
        raise ValidationError(f"{name} must be a non-empty finite rate path")
    array.setflags(write=False)
    return array


def _at(path: np.ndarray, step: int) -> float:
    return float(path[0] if path.size == 1 else path[step])


def _check_path(path: np.ndarray, steps: int, name: str) -> None:
    if path.size not in (1, steps):
        raise ValidationError(f"{name} has {path.size} values, lattice has {steps} steps")


@dataclass(frozen=True, eq=False)
class AmbiguousRate:
    """g(y) = R y^- - r y^+ = sup over r <= beta <= R of -beta y."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self) -> None:
        low, high = _rate_path(self.low, "rate-low"), _rate_path(self.high, "rate-high")
        if low.size != high.size and 1 not in (low.size, high.size):
            raise ValidationError(f"rate paths have {low.size} and {high.size} steps")
        if np.any(low < 0.0) or np.any(low > high):
            raise ValidationError(f"ambiguous rates need 0 <= r <= R, got r={low.tolist()} R={high.tolist()}")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    quadratic = 0.0
    convex = True
    decreasing_in_y = True

    @property
    def lipschitz_y(self) -> float:
        return float(np.max(self.high))

    def rates(self, step: int) -> tuple[float, float]:
        return _at(self.low, step), _at(self.high, step)

    def validate_for(self, steps: int) -> None:
        _check_path(self.low, steps, "rate-low")
        _check_path(self.high, steps, "rate-high")

    def __call__(self, step: int, y, z):
        r, big_r = self.rates(step)
        y = np.asarray(y, dtype=float)
        return big_r * np.maximum(-y, 0.0) - r * np.maximum(y, 0.0)


@dataclass(frozen=True, eq=False)
class LinearRate:
    """g(y) = -beta y: plain discounting at rate beta."""

    beta: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", _rate_path(self.beta, "beta"))

    quadratic = 0.0
    convex = True

    @property
    def lipschitz_y(self) -> float:
        return float(np.max(np.abs(self.beta)))

    @property
    def decreasing_in_y(self) -> bool:
        return bool(np.all(self.beta >= 0.0))

    def rate(self, step: int) -> float:
        return _at(self.beta, step)

    def validate_for(self, steps: int) -> None:
        _check_path(self.beta, steps, "beta")

    def __call__(self, step: int, y, z):
        return -self.rate(step) * np.asarray(y, dtype=float)


@dataclass(frozen=True, eq=False)
class CustomGenerator:
    """User generator; convexity and monotonicity are declared, then spot-checked by `sample_check`."""

    fn: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    lipschitz_y: float
    quadratic: float = 0.0
    convex: bool = True
    decreasing_in_y: bool = True

    def __post_init__(self) -> None:
        if not callable(self.fn):
            raise ValidationError("custom generator needs a callable")
        if self.lipschitz_y < 0.0 or self.quadratic < 0.0:
            raise ValidationError("growth constants C and k must be nonnegative")

    def validate_for(self, steps: int) -> None:
        return None

    def __call__(self, step: int, y, z):
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(self.fn(step, y, np.asarray(z, dtype=float)), dtype=float), y.shape)


@dataclass(frozen=True, eq=False)
class ShiftedGenerator:
    """g^m(step, y, z) = g(step, y - m, z)."""

    base: "GeneratorSpec"
    shift: float

    @property
    def lipschitz_y(self) -> float:
        return self.base.lipschitz_y

    @property
    def quadratic(self) -> float:
        return self.base.quadratic

    @property
    def convex(self) -> bool:
        return self.base.convex

    @property
    def decreasing_in_y(self) -> bool:
        return self.base.decreasing_in_y

    def validate_for(self, steps: int) -> None:
        self.base.validate_for(steps)

    def __call__(self, step: int, y, z):
        return self.base(step, np.asarray(y, dtype=float) - self.shift, z)


GeneratorSpec = AmbiguousRate | LinearRate | CustomGenerator | ShiftedGenerator


def ambiguous_rate_generator(low, high) -> AmbiguousRate:
    return AmbiguousRate(low, high)


def shifted_generator(g: GeneratorSpec, m: float) -> ShiftedGenerator:
    return ShiftedGenerator(g, float(m))


def sample_check(g: GeneratorSpec, steps: int, y_samples, z_samples, tol: float = 1e-12) -> CheckReport:
    """Spot-check declared monotone decrease in y, convexity in (y, z) and the growth bound."""
    ys = np.sort(np.asarray(y_samples, dtype=float))
    zs = np.asarray(z_samples, dtype=float)
    for step in range(steps):
        for z in zs:
            values = np.asarray(g(step, ys, np.full_like(ys, z)), dtype=float)
            if g.decreasing_in_y and np.any(np.diff(values) > tol):
                k = int(np.argmax(np.diff(values)))
                return CheckReport.from_flag("generator", False, {"property": "decreasing_in_y"}, (step, float(ys[k]), float(z)))
            mid = np.asarray(g(step, 0.5 * (ys[1:] + ys[:-1]), np.full(ys.size - 1, z)), dtype=float)
            if g.convex and np.any(mid - 0.5 * (values[1:] + values[:-1]) > tol):
                return CheckReport.from_flag("generator", False, {"property": "convex"}, (step, float(z)))
            origin = float(np.asarray(g(step, np.zeros(1), np.zeros(1))).reshape(-1)[0])
            bound = abs(origin) + g.lipschitz_y * np.abs(ys) + 0.5 * g.quadratic * z * z
            if np.any(np.abs(values) > bound + tol):
                return CheckReport.from_flag("generator", False, {"property": "growth"}, (step, float(z)))
    return CheckReport.from_flag("generator", True, {"samples": int(ys.size * max(zs.size, 1) * steps)})
