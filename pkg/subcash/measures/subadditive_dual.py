"""Sub-probability penalties and dual representations of sub-additive reserves.

R(X) = max over sub-probabilities mu of mu(-X) - alpha(mu). For envelope
reserves on a linear base the penalty is the indicator of a per-atom box
{D_L P <= mu <= D_H P}, which makes the dual an exactly solvable LP.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import pandas as pd

import config
from ..core.grids import GridSpec, subprob_grid_matrix
from ..core.scenario import ProbabilityWeights, as_position, weights_of
from ..errors import ValidationError
from .cash_additive import Linear, grid_penalty_bound, minimal_penalty
from .convex_discount import ConvexDiscountFunction
from .penalties import SubPenaltyTable, table_maximum
from .subadditive import CashAdditiveReserve, ComposedReserve, EnvelopeReserve, PutPremiumReserve

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BoxSubPenalty:
    """alpha(mu) = 0 on {low <= mu <= high}, +inf elsewhere."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self) -> None:
        low = np.array(self.low, dtype=float).reshape(-1)
        high = np.array(self.high, dtype=float).reshape(-1)
        if low.shape != high.shape or np.any(low < 0.0) or np.any(low > high):
            raise ValidationError("box penalty needs 0 <= low <= high with equal shapes")
        if float(np.sum(high)) > 1.0 + config.TOLERANCE_CONFIG["mass"]:
            raise ValidationError("box penalty upper corner must be a sub-probability")
        low.setflags(write=False)
        high.setflags(write=False)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @classmethod
    def for_envelope(cls, reserve: EnvelopeReserve) -> "BoxSubPenalty":
        if not isinstance(reserve.rho0, Linear):
            raise ValidationError("the box penalty needs a linear base measure")
        p = reserve.rho0.base.weights
        return cls(reserve.envelope.low.values * p, reserve.envelope.high.values * p)

    @property
    def size(self) -> int:
        return int(self.low.size)

    @property
    def mass_range(self) -> tuple[float, float]:
        return float(np.sum(self.low)), float(np.sum(self.high))

    def __call__(self, mu) -> float:
        weights = weights_of(mu)
        tol = config.TOLERANCE_CONFIG["probability"]
        inside = np.all(weights >= self.low - tol) and np.all(weights <= self.high + tol)
        return 0.0 if inside else math.inf

    def maximize(self, x) -> tuple[float, np.ndarray]:
        """sup over the box of mu(-x): upper corner on losses, lower corner elsewhere."""
        x = as_position(x, self.size)
        mu = np.where(x < 0.0, self.high, self.low)
        return float(mu @ -x), mu

    def maximize_at_mass(self, x, mass: float) -> tuple[float, np.ndarray | None]:
        """sup of mu(-x) over the box slice of total mass `mass` (greedy fractional fill)."""
        x = as_position(x, self.size)
        lo_mass, hi_mass = self.mass_range
        tol = config.TOLERANCE_CONFIG["mass"]
        if mass < lo_mass - tol or mass > hi_mass + tol:
            return -math.inf, None
        mu = self.low.copy()
        remaining = mass - lo_mass
        for i in np.argsort(x, kind="stable"):
            if remaining <= 0.0:
                break
            add = min(self.high[i] - self.low[i], remaining)
            mu[i] += add
            remaining -= add
        return float(mu @ -x), mu


def composed_penalty(rho0, v: ConvexDiscountFunction, mu, grid: GridSpec | None = None) -> float:
    """Penalty of rho0(-V): sum_i P_i beta_i(-mu_i / P_i) for a linear base."""
    weights = weights_of(mu)
    if isinstance(rho0, Linear):
        p = rho0.base.weights
        total = 0.0
        for i, piece in enumerate(v.pieces):
            if p[i] == 0.0:
                if weights[i] > 0.0:
                    return math.inf
                continue
            total += p[i] * float(piece.conjugate(-weights[i] / p[i]))
        return total
    reserve = ComposedReserve(rho0, v)
    return grid_penalty_bound(reserve, weights, grid or _default_grid())


def _default_grid() -> GridSpec:
    return GridSpec(config.GRID_CONFIG["default_resolution"], 10.0)


def exact_subprob_penalty(reserve) -> Callable[[np.ndarray], float] | None:
    """Closed-form alpha^R for the shipped constructions, None when only a grid bound exists."""
    if isinstance(reserve, PutPremiumReserve) and reserve.strike == 0.0:
        reserve = reserve.as_envelope()
    if isinstance(reserve, EnvelopeReserve) and isinstance(reserve.rho0, Linear):
        return BoxSubPenalty.for_envelope(reserve)
    if isinstance(reserve, ComposedReserve) and isinstance(reserve.rho0, Linear):
        return lambda mu: composed_penalty(reserve.rho0, reserve.v, mu)
    if isinstance(reserve, CashAdditiveReserve):
        spec = reserve.spec

        def _cash_additive(mu) -> float:
            weights = weights_of(mu)
            if abs(float(np.sum(weights)) - 1.0) > config.TOLERANCE_CONFIG["probability"]:
                return math.inf
            return minimal_penalty(spec, ProbabilityWeights.normalized(weights))

        return _cash_additive
    return None


def minimal_penalty_subprob(reserve, mu, grid: GridSpec | None = None) -> float:
    """alpha^R(mu) = sup_X mu(-X) - R(X); exact when a closed form exists, else a grid lower bound."""
    exact = exact_subprob_penalty(reserve)
    if exact is not None:
        return float(exact(mu))
    logger.debug("no closed-form penalty for %s; using a grid lower bound", type(reserve).__name__)
    return grid_penalty_bound(reserve, weights_of(mu), grid or _default_grid())


def build_subpenalty_table(reserve, n: int, grid: GridSpec, position_grid: GridSpec | None = None) -> SubPenaltyTable:
    measures = subprob_grid_matrix(n, grid)
    exact = exact_subprob_penalty(reserve)
    if exact is not None:
        penalties = np.array([exact(row) for row in measures])
    else:
        bound_grid = position_grid or _default_grid()
        evaluations = len(measures) * bound_grid.resolution**n
        if evaluations > config.GRID_CONFIG["warn_evaluations"]:
            logger.warning(
                "no closed-form penalty for %s: %d weights x %d^%d positions = %d reserve evaluations",
                type(reserve).__name__,
                len(measures),
                bound_grid.resolution,
                n,
                evaluations,
            )
        penalties = np.array([grid_penalty_bound(reserve, row, bound_grid) for row in measures])
    return SubPenaltyTable(measures, penalties, grid, exact=False)


@dataclass(frozen=True)
class NormalizedDual:
    value: float
    mass: float
    measure: ProbabilityWeights | None
    mass_range: tuple[float, float]
    maximizer: np.ndarray


def dual_evaluate_subprob(pen: SubPenaltyTable | BoxSubPenalty, x) -> float:
    if isinstance(pen, BoxSubPenalty):
        value, _ = pen.maximize(x)
        return value
    value, _ = table_maximum(pen, as_position(x, pen.size))
    return value


def subprob_mesh_bound(grid: GridSpec, x) -> float:
    """Dual gap bound of a sub-probability grid whose feasible cells are at least one step wide."""
    return float(np.sum(np.abs(np.asarray(x, dtype=float)))) * grid.unit_step


def normalized_dual(pen: SubPenaltyTable | BoxSubPenalty, x) -> NormalizedDual:
    """The dual written over (c, Q) with mu = c Q; reports c*, Q* and the range of optimal masses."""
    x = as_position(x, pen.size)
    if isinstance(pen, BoxSubPenalty):
        value, mu = pen.maximize(x)
        free = x == 0.0
        lo = float(np.sum(np.where(free, pen.low, mu)))
        hi = float(np.sum(np.where(free, pen.high, mu)))
        mass_range = (lo, hi)
    else:
        values = pen.measures @ -x - pen.penalties
        value = float(np.max(values))
        ties = np.abs(values - value) <= config.TOLERANCE_CONFIG["closed_form"]
        masses = pen.masses[ties]
        mu = pen.measures[int(np.argmax(values))]
        mass_range = (float(np.min(masses)), float(np.max(masses)))
    mass = float(np.sum(mu))
    measure = ProbabilityWeights.normalized(mu) if mass > 0.0 else None
    return NormalizedDual(value, mass, measure, mass_range, np.asarray(mu))


def forward_family_curve(pen: SubPenaltyTable | BoxSubPenalty, x, c_grid: Sequence[float]) -> pd.Series:
    """c -> c * rho_{T,c}(-X) = sup over mu of mass c of mu(-X) - alpha(mu)."""
    x = as_position(x, pen.size)
    c_values = np.asarray(c_grid, dtype=float)
    if c_values.size == 0 or np.any(c_values <= 0.0) or np.any(c_values > 1.0):
        raise ValidationError("c-grid must be nonempty and lie in (0, 1]")
    curve = np.empty(c_values.size)
    for k, c in enumerate(c_values):
        if isinstance(pen, BoxSubPenalty):
            curve[k], _ = pen.maximize_at_mass(x, c)
        else:
            on_slice = np.abs(pen.masses - c) <= config.TOLERANCE_CONFIG["closed_form"]
            values = pen.measures[on_slice] @ -x - pen.penalties[on_slice]
            curve[k] = float(np.max(values)) if values.size else -math.inf
    return pd.Series(curve, index=pd.Index(c_values, name="c"), name="discounted_forward")


def worst_discounted_forward(pen: SubPenaltyTable | BoxSubPenalty, x, c_grid: Sequence[float]) -> float:
    """sup_c c * rho_{T,c}(-X); agrees with the full dual up to the c-grid spacing."""
    return float(forward_family_curve(pen, x, c_grid).max())
