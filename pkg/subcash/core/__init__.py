"""Finite sample spaces, weights, and enumeration grids."""

from .grids import GridSpec, position_grid, position_grid_matrix, simplex_grid_matrix, subprob_grid, subprob_grid_matrix
from .scenario import (
    ProbabilityWeights,
    ScenarioSpace,
    SubProbability,
    as_position,
    expectation,
    pos_neg_parts,
    weights_of,
)

__all__ = [
    "GridSpec",
    "ProbabilityWeights",
    "ScenarioSpace",
    "SubProbability",
    "as_position",
    "expectation",
    "pos_neg_parts",
    "position_grid",
    "position_grid_matrix",
    "simplex_grid_matrix",
    "subprob_grid",
    "subprob_grid_matrix",
    "weights_of",
]
