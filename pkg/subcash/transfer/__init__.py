"""Optimal risk transfer by inf-convolution."""

from .descent import DescentConfig, DescentResult, coordinate_descent, grid_minimize, minimize_with_restarts
from .inf_convolution import (
    InfConvolution,
    TransferProblem,
    TransferSolution,
    convolution_functional,
    hat_equivalence_check,
    indifference_price,
    inf_convolution,
    penalty_sum_check,
    solve_transfer,
)

__all__ = [
    "DescentConfig",
    "DescentResult",
    "InfConvolution",
    "TransferProblem",
    "TransferSolution",
    "convolution_functional",
    "coordinate_descent",
    "grid_minimize",
    "hat_equivalence_check",
    "indifference_price",
    "inf_convolution",
    "minimize_with_restarts",
    "penalty_sum_check",
    "solve_transfer",
]
