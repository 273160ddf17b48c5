"""Spot and forward risk measures under a non-ambiguous discount factor.

q_T(X) = rho_0(D X) / B turns a spot measure into a forward one; it is cash
additive in horizon cash exactly when rho_0(lam D) = -lam B (calibration).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

import config
from ..core.scenario import ProbabilityWeights, as_position, as_vector
from ..errors import DivisionGuardError, ValidationError
from ..evaluation.checks import CheckReport
from .cash_additive import Linear, RiskMeasureSpec, evaluate_rho
from .penalties import PenaltyTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DiscountFactor:
    values: np.ndarray

    def __post_init__(self) -> None:
        values = as_vector(self.values, name="discount factor")
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise ValidationError(f"discount factors must lie in [0, 1]: {values.tolist()}")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value: float, n: int) -> "DiscountFactor":
        return cls(np.full(n, float(value)))

    @property
    def size(self) -> int:
        return int(self.values.size)

    def bounded_away(self, epsilon: float = config.DISCOUNT_EPSILON) -> bool:
        return bool(np.min(self.values) >= epsilon)

    def require_bounded_away(self, epsilon: float = config.DISCOUNT_EPSILON) -> None:
        if not self.bounded_away(epsilon):
            raise DivisionGuardError(f"discount factor min {float(np.min(self.values))!r} is below the guard {epsilon!r}")


@dataclass(frozen=True)
class BondQuote:
    price: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.price) or not 0.0 < self.price <= 1.0:
            raise ValidationError(f"zero-coupon bond price must lie in (0, 1], got {self.price!r}")


def _check_sizes(d: DiscountFactor, x: np.ndarray) -> None:
    if d.size != x.size:
        raise ValidationError(f"discount factor has {d.size} atoms, position has {x.size}")


def forward_from_spot(rho0: RiskMeasureSpec, d: DiscountFactor, b: BondQuote, x) -> float:
    x = as_position(x)
    _check_sizes(d, x)
    return evaluate_rho(rho0, d.values * x) / b.price


def spot_from_forward(rho_t: RiskMeasureSpec, d: DiscountFactor, b: BondQuote, y) -> float:
    y = as_position(y)
    _check_sizes(d, y)
    d.require_bounded_away()
    return b.price * evaluate_rho(rho_t, y / d.values)


def check_forward_calibration(
    rho0: RiskMeasureSpec,
    d: DiscountFactor,
    b: BondQuote,
    lambdas: Sequence[float] = config.CALIBRATION_LAMBDAS,
    tol: float | None = None,
) -> CheckReport:
    tol = config.TOLERANCE_CONFIG["closed_form"] if tol is None else tol
    lambdas = [float(lam) for lam in lambdas]
    if 0.0 not in lambdas or not any(lam > 0 for lam in lambdas) or not any(lam < 0 for lam in lambdas):
        raise ValidationError("calibration lambdas must include 0 and both signs")
    gaps = {lam: abs(evaluate_rho(rho0, lam * d.values) + lam * b.price) for lam in lambdas}
    failing = [lam for lam, gap in gaps.items() if gap > tol]
    details = {"max_gap": max(gaps.values()), "failing_lambdas": failing}
    return CheckReport.from_flag("forward_calibration", not failing, details, failing[0] if failing else None)


def check_forward_cash_additivity(
    rho0: RiskMeasureSpec,
    d: DiscountFactor,
    b: BondQuote,
    x,
    shifts: Sequence[float],
    tol: float | None = None,
) -> CheckReport:
    """q_T(X + m) = q_T(X) - m on each shift; the first failing m is the witness."""
    tol = config.TOLERANCE_CONFIG["closed_form"] if tol is None else tol
    x = as_position(x)
    base = forward_from_spot(rho0, d, b, x)
    calibrated = check_forward_calibration(rho0, d, b).passed
    for m in shifts:
        gap = abs(forward_from_spot(rho0, d, b, x + m) - (base - m))
        if gap > tol:
            return CheckReport.from_flag("forward_cash_additivity", False, {"calibrated": calibrated, "gap": gap}, float(m))
    return CheckReport.from_flag("forward_cash_additivity", True, {"calibrated": calibrated})


def forward_measure(rho0: RiskMeasureSpec, d: DiscountFactor, b: BondQuote) -> Linear:
    """Forward measure of a calibrated linear spot measure: density D / B."""
    if not isinstance(rho0, Linear):
        raise ValidationError("a closed-form forward measure exists only for linear spot measures")
    density = d.values * rho0.base.weights / b.price
    mass = float(np.sum(density))
    if abs(mass - 1.0) > config.TOLERANCE_CONFIG["closed_form"]:
        raise ValidationError(f"spot measure is not calibrated: E_Q[D] / B = {mass!r}")
    return Linear(ProbabilityWeights(density / mass))


def transform_penalty(
    alpha0: PenaltyTable,
    d: DiscountFactor,
    b: BondQuote,
    candidates: np.ndarray | None = None,
) -> PenaltyTable:
    """alpha_T(Q_T) = alpha_0(Q_0) / B with (Q_0)_i = (B / D_i) (Q_T)_i.

    Candidate forward measures default to the spot table's own rows plus the
    forward images D Q_0 / B of its rows that are probability vectors.
    """
    d.require_bounded_away()
    if d.size != alpha0.size:
        raise ValidationError(f"discount factor has {d.size} atoms, penalty table has {alpha0.size}")
    tol = config.TOLERANCE_CONFIG["probability"]
    if candidates is None:
        images = alpha0.measures * d.values / b.price
        images = images[np.abs(images.sum(axis=1) - 1.0) <= tol]
        candidates = np.vstack([alpha0.measures, images]) if images.size else alpha0.measures
        candidates = np.unique(candidates, axis=0)
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    penalties = np.full(candidates.shape[0], math.inf)
    for index, q_t in enumerate(candidates):
        q_0 = b.price * q_t / d.values
        if abs(float(np.sum(q_0)) - 1.0) > tol:
            continue
        penalty = alpha0.lookup(q_0)
        if math.isfinite(penalty):
            penalties[index] = penalty / b.price
    logger.debug("transformed %d candidates, %d finite", candidates.shape[0], int(np.isfinite(penalties).sum()))
    return PenaltyTable(candidates, penalties, alpha0.grid, alpha0.exact)
