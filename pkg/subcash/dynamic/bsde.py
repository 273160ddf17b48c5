"""Implicit backward induction for BSDEs on the binomial lattice.

At node (i, j) the scheme sets Z = (Y_up - Y_down) / (2 sqrt(dt)) and solves
Y = E[Y_next | node] + g(i, Y, Z) dt by fixed-point iteration, a contraction
whenever C dt < 1. The terminal layer is the supplied condition, untouched.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

import config
from ..errors import NumericError, StepSizeError, ValidationError
from .generators import GeneratorSpec, LinearRate
from .lattice import Lattice

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BsdeSolution:
    """Layers `first_step` .. `last_step` of (Y, Z); Z has no terminal layer."""

    lattice: Lattice
    values: tuple[np.ndarray, ...]
    controls: tuple[np.ndarray, ...]
    iterations: tuple[int, ...]
    first_step: int = 0

    @property
    def last_step(self) -> int:
        return self.first_step + len(self.values) - 1

    def _index(self, step: int) -> int:
        if not self.first_step <= step <= self.last_step:
            raise ValidationError(f"step {step} outside solved range {self.first_step}..{self.last_step}")
        return step - self.first_step

    def layer(self, step: int) -> np.ndarray:
        return self.values[self._index(step)]

    def control(self, step: int) -> np.ndarray | None:
        index = self._index(step)
        return self.controls[index] if index < len(self.controls) else None

    @property
    def root(self) -> float:
        if self.first_step != 0:
            raise ValidationError(f"solution starts at step {self.first_step}, not at the root")
        return float(self.values[0][0])

    def to_frame(self, beta_bar: tuple[np.ndarray, ...] | None = None) -> pd.DataFrame:
        """One row per node: step, node_index, W, Y, Z (NaN on the terminal layer), optional beta_bar."""
        rows = []
        for step in range(self.first_step, self.last_step + 1):
            y = self.layer(step)
            z = self.control(step)
            frame = pd.DataFrame(
                {
                    "step": step,
                    "node_index": np.arange(step + 1),
                    "W": self.lattice.driver(step),
                    "Y": y,
                    "Z": np.nan if z is None else z,
                }
            )
            if beta_bar is not None:
                index = self._index(step)
                frame["beta_bar"] = beta_bar[index] if index < len(beta_bar) else np.nan
            rows.append(frame)
        return pd.concat(rows, ignore_index=True)


def check_step_size(lattice: Lattice, g: GeneratorSpec) -> None:
    g.validate_for(lattice.steps)
    if g.lipschitz_y * lattice.dt >= 1.0:
        needed = int(np.floor(g.lipschitz_y * lattice.horizon)) + 1
        raise StepSizeError(
            f"implicit step needs C*dt < 1, got C={g.lipschitz_y:g}, dt={lattice.dt:g}; use more than {needed} steps"
        )


def _solve_node_layer(g: GeneratorSpec, step: int, mean: np.ndarray, z: np.ndarray, dt: float) -> tuple[np.ndarray, int]:
    tol = config.BSDE_CONFIG["fixed_point_tolerance"]
    y = mean.copy()
    for iteration in range(1, config.BSDE_CONFIG["max_iterations"] + 1):
        updated = mean + np.asarray(g(step, y, z), dtype=float) * dt
        gap = np.abs(updated - y)
        y = updated
        if np.all(gap <= tol * np.maximum(1.0, np.abs(y))):
            return y, iteration
    raise NumericError(f"fixed point at step {step} did not converge in {iteration} iterations", best_iterate=y, best_value=float(np.max(gap)))


def backward_induction(lattice: Lattice, g: GeneratorSpec, terminal, start_step: int | None = None, stop_step: int = 0) -> BsdeSolution:
    """Solve from layer `start_step` (holding `terminal`) back to layer `stop_step`."""
    start_step = lattice.steps if start_step is None else start_step
    if not 0 <= stop_step <= start_step <= lattice.steps:
        raise ValidationError(f"need 0 <= stop <= start <= {lattice.steps}, got stop={stop_step} start={start_step}")
    check_step_size(lattice, g)
    current = np.asarray(terminal, dtype=float)
    if current.shape != (start_step + 1,) or not np.all(np.isfinite(current)):
        raise ValidationError(f"terminal layer needs {start_step + 1} finite values, got shape {current.shape}")

    dt, scale = lattice.dt, 2.0 * lattice.sqrt_dt
    values = [current]
    controls: list[np.ndarray] = []
    iterations: list[int] = []
    for step in range(start_step - 1, stop_step - 1, -1):
        z = (current[1:] - current[:-1]) / scale
        current, count = _solve_node_layer(g, step, Lattice.conditional_mean(current), z, dt)
        values.append(current)
        controls.append(z)
        iterations.append(count)
    logger.debug("backward induction %d -> %d: max %d fixed-point iterations", start_step, stop_step, max(iterations, default=0))
    return BsdeSolution(lattice, tuple(reversed(values)), tuple(reversed(controls)), tuple(reversed(iterations)), stop_step)


def solve_bsde(lattice: Lattice, g: GeneratorSpec, terminal) -> BsdeSolution:
    """Terminal values are Y_T, i.e. -X for the risk measure of X."""
    return backward_induction(lattice, g, lattice.terminal_values(terminal))


def discounted_expectation(lattice: Lattice, beta, terminal) -> BsdeSolution:
    """Reference solve with g = -beta y: plain lattice discounting of the terminal."""
    return solve_bsde(lattice, LinearRate(beta), terminal)


def _discount_path(lattice: Lattice, rates) -> np.ndarray:
    """Products of 1 / (1 + rate_i dt) from each step to the horizon; entry N is 1."""
    path = np.broadcast_to(np.asarray(rates, dtype=float).reshape(-1), (lattice.steps,))
    factors = 1.0 / (1.0 + path * lattice.dt)
    return np.append(np.cumprod(factors[::-1])[::-1], 1.0)


def worst_discount_bound(lattice: Lattice, low, high, terminal) -> tuple[np.ndarray, ...]:
    """E[D^r Y_T^+ - D^R Y_T^- | node] per layer, with D^r, D^R the implicit-step discount factors.

    Discounting each path at the worse rate separately dominates the ambiguous
    rate solution nodewise; the root is the ambiguous-discount reserve of the
    terminal distribution with constant envelope (D^R, D^r).
    """
    terminal = lattice.terminal_values(terminal)
    slow, fast = _discount_path(lattice, low), _discount_path(lattice, high)
    gains, losses = np.maximum(terminal, 0.0), np.maximum(-terminal, 0.0)
    layers = [slow[-1] * gains - fast[-1] * losses]
    for step in range(lattice.steps - 1, -1, -1):
        gains, losses = Lattice.conditional_mean(gains), Lattice.conditional_mean(losses)
        layers.append(slow[step] * gains - fast[step] * losses)
    return tuple(reversed(layers))
