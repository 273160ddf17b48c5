"""Cash sub-additive reserves built from a cash additive base measure.

Every reserve here is a plain callable position -> float, so the checks, the
extension and the transfer solver treat them as opaque functionals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

import config
from ..core.grids import box_grid_matrix
from ..core.scenario import ProbabilityWeights, as_position, as_vector, pos_neg_parts
from ..errors import ValidationError
from ..evaluation.checks import CheckReport
from .cash_additive import Linear, RiskMeasureSpec, evaluate_many, evaluate_rho, spec_size
from .convex_discount import ConvexDiscountFunction
from .spot_forward import DiscountFactor


class Reserve(Protocol):
    def __call__(self, x: np.ndarray) -> float: ...


@dataclass(frozen=True, eq=False)
class DiscountEnvelope:
    low: DiscountFactor
    high: DiscountFactor

    def __post_init__(self) -> None:
        low = self.low if isinstance(self.low, DiscountFactor) else DiscountFactor(self.low)
        high = self.high if isinstance(self.high, DiscountFactor) else DiscountFactor(self.high)
        if low.size != high.size:
            raise ValidationError(f"envelope bounds have {low.size} and {high.size} atoms")
        if np.any(low.values > high.values):
            raise ValidationError(f"envelope needs D_L <= D_H: {low.values.tolist()} vs {high.values.tolist()}")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @classmethod
    def constant(cls, d_low: float, d_high: float, n: int) -> "DiscountEnvelope":
        return cls(DiscountFactor.constant(d_low, n), DiscountFactor.constant(d_high, n))

    @property
    def size(self) -> int:
        return self.low.size

    def contains(self, d) -> bool:
        d = np.asarray(getattr(d, "values", d), dtype=float)
        return bool(np.all(d >= self.low.values) and np.all(d <= self.high.values))

    def discount_function(self) -> ConvexDiscountFunction:
        return ConvexDiscountFunction.from_bounds(self.low.values, self.high.values)


@dataclass(frozen=True)
class GridSupremum:
    value: float
    maximizer: np.ndarray
    mesh_bound: float
    exact: bool = False


def _check_envelope(rho0: RiskMeasureSpec, env: DiscountEnvelope, x: np.ndarray) -> None:
    if env.size != x.size:
        raise ValidationError(f"envelope has {env.size} atoms, position has {x.size}")
    size = spec_size(rho0)
    if size is not None and size != x.size:
        raise ValidationError(f"measure has {size} atoms, position has {x.size}")


def worst_case_discount(env: DiscountEnvelope, x) -> np.ndarray:
    """D* = D_L on gains (ties included), D_H on losses."""
    x = as_position(x, env.size)
    return np.where(x >= 0.0, env.low.values, env.high.values)


def ambiguous_discount_reserve(rho0: RiskMeasureSpec, env: DiscountEnvelope, x) -> float:
    x = as_position(x)
    _check_envelope(rho0, env, x)
    positive, negative = pos_neg_parts(x)
    return evaluate_rho(rho0, env.low.values * positive - env.high.values * negative)


def grid_discount_reserve(rho0: RiskMeasureSpec, env: DiscountEnvelope, x, resolution: int = 21) -> GridSupremum:
    """Brute-force sup of rho0(D x) over a per-atom D-grid spanning the envelope."""
    x = as_position(x)
    _check_envelope(rho0, env, x)
    discounts = box_grid_matrix(env.low.values, env.high.values, resolution)
    values = evaluate_many(rho0, discounts * x)
    index = int(np.argmax(values))
    widths = (env.high.values - env.low.values) * np.abs(x)
    return GridSupremum(float(values[index]), discounts[index], float(np.max(widths)) / (resolution - 1))


def put_premium(p, gross_rate: float, x, strike: float = 0.0) -> float:
    """(1/r) E_p[(K - X)+]."""
    if not math.isfinite(gross_rate) or gross_rate < 1.0:
        raise ValidationError(f"gross rate must be >= 1, got {gross_rate!r}")
    weights = p.weights if isinstance(p, ProbabilityWeights) else ProbabilityWeights(p).weights
    x = as_position(x, weights.size)
    return float(weights @ np.maximum(strike - x, 0.0)) / gross_rate


def compose_with_convex(rho0: RiskMeasureSpec, v: ConvexDiscountFunction, x) -> float:
    """rho0(-V(X)) with V applied atomwise."""
    x = as_position(x, v.size)
    return evaluate_rho(rho0, -v(x))


def compose_representation(rho0: RiskMeasureSpec, v: ConvexDiscountFunction, x, resolution: int = 21) -> GridSupremum:
    """sup over per-atom D in [0, 1] of rho0(D x + beta(-D)) on a D-grid.

    rho0 is decreasing, so the sup is attained at the atomwise minimum of
    D x_i + beta_i(-D). The grid contains every -s_k, where that minimum lies,
    so the grid value is exact.
    """
    x = as_position(x, v.size)
    base = np.linspace(0.0, 1.0, resolution)
    chosen = np.empty(v.size)
    floor = np.empty(v.size)
    for i, piece in enumerate(v.pieces):
        levels = np.union1d(base, piece.minimizing_discounts())
        candidates = levels * x[i] + np.asarray(piece.conjugate(-levels), dtype=float)
        k = int(np.argmin(candidates))
        chosen[i], floor[i] = levels[k], candidates[k]
    return GridSupremum(evaluate_rho(rho0, floor), chosen, 0.0, exact=True)


@dataclass(frozen=True, eq=False)
class CashAdditiveReserve:
    """A cash additive measure read as a (trivially) sub-additive reserve."""

    spec: RiskMeasureSpec

    def __call__(self, x) -> float:
        return evaluate_rho(self.spec, x)


@dataclass(frozen=True, eq=False)
class EnvelopeReserve:
    rho0: RiskMeasureSpec
    envelope: DiscountEnvelope

    def __call__(self, x) -> float:
        return ambiguous_discount_reserve(self.rho0, self.envelope, x)

    def discount_function(self) -> ConvexDiscountFunction:
        return self.envelope.discount_function()


@dataclass(frozen=True, eq=False)
class PutPremiumReserve:
    probabilities: ProbabilityWeights
    gross_rate: float
    strike: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.probabilities, ProbabilityWeights):
            object.__setattr__(self, "probabilities", ProbabilityWeights(self.probabilities))
        if not math.isfinite(self.gross_rate) or self.gross_rate < 1.0:
            raise ValidationError(f"gross rate must be >= 1, got {self.gross_rate!r}")

    def __call__(self, x) -> float:
        return put_premium(self.probabilities, self.gross_rate, x, self.strike)

    def as_envelope(self) -> EnvelopeReserve:
        """The (0, 1/r) envelope reserve under Linear(p); equal to the premium for K = 0."""
        n = self.probabilities.size
        return EnvelopeReserve(Linear(self.probabilities), DiscountEnvelope.constant(0.0, 1.0 / self.gross_rate, n))


@dataclass(frozen=True, eq=False)
class ComposedReserve:
    rho0: RiskMeasureSpec
    v: ConvexDiscountFunction

    def __call__(self, x) -> float:
        return compose_with_convex(self.rho0, self.v, x)


def check_cash_subadditive(
    reserve: Callable[[np.ndarray], float],
    x,
    m_grid: Sequence[float],
    tol: float | None = None,
) -> CheckReport:
    """m -> R(X + m) + m nondecreasing, plus R(X + |m|) >= R(X) - |m| and R(X - |m|) <= R(X) + |m|."""
    tol = config.TOLERANCE_CONFIG["closed_form"] if tol is None else tol
    grid = np.asarray(m_grid, dtype=float)
    if grid.size and np.any(np.diff(grid) < 0.0):
        raise ValidationError("m-grid must be sorted")
    x = as_position(x)
    base = reserve(x)
    shifted = np.array([reserve(x + m) + m for m in grid])
    drops = np.diff(shifted)
    details: dict = {"map": shifted.tolist(), "max_drop": float(max(0.0, -np.min(drops))) if drops.size else 0.0}
    if drops.size and np.min(drops) < -tol:
        k = int(np.argmin(drops))
        return CheckReport.from_flag("cash_subadditivity", False, details, float(grid[k + 1]))
    for m in np.abs(grid):
        if reserve(x + m) < base - m - tol or reserve(x - m) > base + m + tol:
            return CheckReport.from_flag("cash_subadditivity", False, details, float(m))
    return CheckReport.from_flag("cash_subadditivity", True, details)


@dataclass(frozen=True, eq=False)
class ExtendedPosition:
    """(X, x) on Omega x {0, 1}: survival leg X, default leg x."""

    survival: np.ndarray
    default: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "survival", as_vector(self.survival, name="survival leg"))
        if not math.isfinite(self.default):
            raise ValidationError("default leg must be finite")
        object.__setattr__(self, "default", float(self.default))

    @classmethod
    def from_vector(cls, values) -> "ExtendedPosition":
        values = np.asarray(values, dtype=float)
        return cls(values[:-1], float(values[-1]))

    def as_vector(self) -> np.ndarray:
        return np.append(self.survival, self.default)


def extend_to_hat(reserve: Callable[[np.ndarray], float], xhat: ExtendedPosition) -> float:
    """rho_hat(X, x) = R(X - x 1) - x."""
    return reserve(xhat.survival - xhat.default) - xhat.default


def hat_functional(reserve: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
    """rho_hat on flattened (n+1)-vectors [X, x]."""
    return lambda values: extend_to_hat(reserve, ExtendedPosition.from_vector(values))


def restrict_to_survival(hat: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
    """X -> hat([X, 0]); cash sub-additive whenever hat is cash additive."""
    return lambda x: hat(np.append(np.asarray(x, dtype=float), 0.0))
