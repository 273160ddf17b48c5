"""Recombining binomial lattice for a one-dimensional Brownian driver."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import ValidationError


@dataclass(frozen=True)
class Lattice:
    """Node (i, j), 0 <= j <= i <= steps, carries W = (2j - i) sqrt(dt); up moves go to (i + 1, j + 1)."""

    steps: int
    horizon: float

    def __post_init__(self) -> None:
        if isinstance(self.steps, bool) or int(self.steps) != self.steps or self.steps < 1:
            raise ValidationError(f"lattice needs steps >= 1, got {self.steps!r}")
        if not math.isfinite(self.horizon) or self.horizon <= 0.0:
            raise ValidationError(f"lattice needs a positive finite horizon, got {self.horizon!r}")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def sqrt_dt(self) -> float:
        return math.sqrt(self.dt)

    def time(self, step: int) -> float:
        return step * self.dt

    def _check_step(self, step: int) -> None:
        if not 0 <= step <= self.steps:
            raise ValidationError(f"step {step} outside 0..{self.steps}")

    def driver(self, step: int) -> np.ndarray:
        self._check_step(step)
        return (2.0 * np.arange(step + 1) - step) * self.sqrt_dt

    def node_probabilities(self, step: int) -> np.ndarray:
        self._check_step(step)
        return stats.binom.pmf(np.arange(step + 1), step, 0.5)

    @staticmethod
    def conditional_mean(next_layer: np.ndarray) -> np.ndarray:
        """E[. | node] of a layer-(i+1) array, returned on layer i."""
        return 0.5 * (next_layer[1:] + next_layer[:-1])

    def expectation(self, terminal) -> float:
        terminal = self.terminal_values(terminal)
        return float(self.node_probabilities(self.steps) @ terminal)

    def terminal_values(self, values, name: str = "terminal") -> np.ndarray:
        array = np.asarray(values, dtype=float)
        if array.ndim == 0:
            array = np.full(self.steps + 1, float(array))
        if array.shape != (self.steps + 1,):
            raise ValidationError(f"{name} needs {self.steps + 1} values, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValidationError(f"{name} has non-finite entries")
        return array


def build_lattice(steps: int, horizon: float) -> Lattice:
    return Lattice(steps, horizon)


def affine_position(lattice: Lattice, constant: float = 0.0, slope: float = 0.0) -> np.ndarray:
    """X = constant + slope * W_T on the terminal layer."""
    return constant + slope * lattice.driver(lattice.steps)
