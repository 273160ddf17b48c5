"""Cash additive base measures and the cash sub-additive constructions built on them."""

from .cash_additive import (
    Entropic,
    Linear,
    RiskMeasureSpec,
    RobustFamily,
    WorstCase,
    build_penalty_table,
    check_calibration,
    dual_evaluate,
    evaluate_rho,
    exact_penalty_table,
    minimal_penalty,
)
from .convex_discount import ConvexDiscountFunction, PiecewiseLinearConvex, fenchel_of_V
from .penalties import PenaltyTable, SubPenaltyTable
from .spot_forward import BondQuote, DiscountFactor, forward_from_spot, spot_from_forward
from .subadditive import (
    CashAdditiveReserve,
    ComposedReserve,
    DiscountEnvelope,
    EnvelopeReserve,
    ExtendedPosition,
    PutPremiumReserve,
    ambiguous_discount_reserve,
    check_cash_subadditive,
    compose_with_convex,
    extend_to_hat,
    put_premium,
)
from .subadditive_dual import BoxSubPenalty, dual_evaluate_subprob, minimal_penalty_subprob, normalized_dual, worst_discounted_forward

__all__ = [
    "BondQuote",
    "BoxSubPenalty",
    "CashAdditiveReserve",
    "ComposedReserve",
    "ConvexDiscountFunction",
    "DiscountEnvelope",
    "DiscountFactor",
    "Entropic",
    "EnvelopeReserve",
    "ExtendedPosition",
    "Linear",
    "PenaltyTable",
    "PiecewiseLinearConvex",
    "PutPremiumReserve",
    "RiskMeasureSpec",
    "RobustFamily",
    "SubPenaltyTable",
    "WorstCase",
    "ambiguous_discount_reserve",
    "build_penalty_table",
    "check_calibration",
    "check_cash_subadditive",
    "compose_with_convex",
    "dual_evaluate",
    "dual_evaluate_subprob",
    "evaluate_rho",
    "exact_penalty_table",
    "extend_to_hat",
    "fenchel_of_V",
    "forward_from_spot",
    "minimal_penalty",
    "minimal_penalty_subprob",
    "normalized_dual",
    "put_premium",
    "spot_from_forward",
    "worst_discounted_forward",
]
