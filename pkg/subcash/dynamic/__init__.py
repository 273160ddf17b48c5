"""g-conditional reserves: BSDEs on a binomial lattice."""

from .bsde import BsdeSolution, backward_induction, discounted_expectation, solve_bsde, worst_discount_bound
from .checks import (
    DualControl,
    comparison_check,
    dual_control_recovery,
    dual_domination_check,
    dynamic_subadditivity_check,
    fenchel_G,
    time_consistency_check,
)
from .generators import AmbiguousRate, CustomGenerator, GeneratorSpec, LinearRate, ambiguous_rate_generator, shifted_generator
from .lattice import Lattice, affine_position, build_lattice

__all__ = [
    "AmbiguousRate",
    "BsdeSolution",
    "CustomGenerator",
    "DualControl",
    "GeneratorSpec",
    "Lattice",
    "LinearRate",
    "affine_position",
    "ambiguous_rate_generator",
    "backward_induction",
    "build_lattice",
    "comparison_check",
    "discounted_expectation",
    "dual_control_recovery",
    "dual_domination_check",
    "dynamic_subadditivity_check",
    "fenchel_G",
    "shifted_generator",
    "solve_bsde",
    "time_consistency_check",
    "worst_discount_bound",
]
