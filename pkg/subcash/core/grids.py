"""Enumeration grids over positions, probabilities and sub-probabilities.

Grids are built from integer lattices so that mass filters are exact: a
sub-probability grid point has integer coordinates k_i with sum k_i <= res-1,
scaled by 1/(res-1).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np

import config
from ..errors import CapacityError, ValidationError
from .scenario import ScenarioSpace, SubProbability, space_size

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    resolution: int
    bound: float = 1.0

    def __post_init__(self) -> None:
        if int(self.resolution) != self.resolution or self.resolution < 2:
            raise ValidationError(f"grid resolution must be an integer >= 2, got {self.resolution!r}")
        if not np.isfinite(self.bound) or self.bound <= 0.0:
            raise ValidationError(f"grid bound must be positive, got {self.bound!r}")
        object.__setattr__(self, "resolution", int(self.resolution))
        object.__setattr__(self, "bound", float(self.bound))

    @classmethod
    def for_positions(cls, *positions, resolution: int | None = None) -> "GridSpec":
        """Truncation radius 4 * max sup-norm of the given positions."""
        scale = max((float(np.max(np.abs(p))) for p in positions), default=0.0)
        bound = max(config.GRID_CONFIG["truncation_multiplier"] * scale, config.GRID_CONFIG["min_bound"])
        return cls(resolution or config.GRID_CONFIG["default_resolution"], bound)

    @property
    def step(self) -> float:
        """Spacing of the position grid on [-M, M]."""
        return 2.0 * self.bound / (self.resolution - 1)

    @property
    def unit_step(self) -> float:
        """Spacing of the weight grids on [0, 1]."""
        return 1.0 / (self.resolution - 1)

    def levels(self) -> np.ndarray:
        return np.linspace(-self.bound, self.bound, self.resolution)


def _check_capacity(resolution: int, n: int) -> None:
    budget = config.GRID_CONFIG["max_points"]
    if resolution**n > budget:
        raise CapacityError(f"grid of {resolution}^{n} points exceeds the enumeration budget of {budget}")


def _integer_lattice(resolution: int, n: int) -> np.ndarray:
    _check_capacity(resolution, n)
    logger.debug("enumerating %d^%d grid points", resolution, n)
    return np.indices((resolution,) * n).reshape(n, -1).T


def subprob_grid_matrix(space: ScenarioSpace | int, grid: GridSpec) -> np.ndarray:
    """All grid sub-probabilities as rows of a (k, n) matrix, lexicographic order."""
    n = space_size(space)
    top = grid.resolution - 1
    lattice = _integer_lattice(grid.resolution, n)
    kept = lattice[lattice.sum(axis=1) <= top]
    return kept / top


def subprob_grid(space: ScenarioSpace | int, grid: GridSpec) -> Iterator[SubProbability]:
    n = space_size(space)
    top = grid.resolution - 1
    _check_capacity(grid.resolution, n)
    for counts in itertools.product(range(grid.resolution), repeat=n):
        if sum(counts) <= top:
            yield SubProbability(np.array(counts, dtype=float) / top)


def simplex_grid_matrix(space: ScenarioSpace | int, grid: GridSpec) -> np.ndarray:
    """Probability vectors of the grid (integer coordinates summing to res-1)."""
    n = space_size(space)
    top = grid.resolution - 1
    lattice = _integer_lattice(grid.resolution, n)
    kept = lattice[lattice.sum(axis=1) == top]
    return kept / top


def position_grid_matrix(space: ScenarioSpace | int, grid: GridSpec) -> np.ndarray:
    n = space_size(space)
    levels = grid.levels()
    return levels[_integer_lattice(grid.resolution, n)]


def position_grid(space: ScenarioSpace | int, grid: GridSpec) -> Iterator[np.ndarray]:
    n = space_size(space)
    _check_capacity(grid.resolution, n)
    levels = grid.levels()
    for counts in itertools.product(range(grid.resolution), repeat=n):
        yield levels[list(counts)]


def box_grid_matrix(low: np.ndarray, high: np.ndarray, resolution: int) -> np.ndarray:
    """Per-atom uniform grids on [low_i, high_i], endpoints included."""
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    fractions = np.linspace(0.0, 1.0, resolution)
    lattice = _integer_lattice(resolution, low.size)
    weights = fractions[lattice]
    return low * (1.0 - weights) + high * weights
