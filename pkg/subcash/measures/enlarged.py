"""Product-space extension of a sub-additive reserve.

Positions on Omega x {0, 1} are pairs (X1, X0): a survival leg and a default
leg. Measures on the product are parameterized by (Q, D) with
Q~(X1, X0) = Q(D X1) + (1 - Q(D)) Qbar(X0) and Qbar = (1 - D) Q / (1 - Q(D)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd

import config
from ..core.grids import GridSpec, box_grid_matrix, simplex_grid_matrix
from ..core.scenario import ProbabilityWeights, as_vector, weights_of
from ..errors import ValidationError
from ..evaluation.checks import CheckReport
from .cash_additive import RiskMeasureSpec, evaluate_rho, minimal_penalty
from .convex_discount import ConvexDiscountFunction
from .penalties import PenaltyTable, SubPenaltyTable
from .spot_forward import DiscountFactor
from .subadditive import compose_with_convex

PenaltyFn = Callable[[np.ndarray], float]


@dataclass(frozen=True, eq=False)
class ProductPosition:
    survival: np.ndarray
    default: np.ndarray

    def __post_init__(self) -> None:
        survival = as_vector(self.survival, name="survival leg")
        default = as_vector(self.default, name="default leg", size=survival.size)
        object.__setattr__(self, "survival", survival)
        object.__setattr__(self, "default", default)

    @classmethod
    def diagonal(cls, x) -> "ProductPosition":
        return cls(x, x)

    @classmethod
    def survival_only(cls, x) -> "ProductPosition":
        x = np.asarray(x, dtype=float)
        return cls(x, np.zeros_like(x))

    @classmethod
    def from_vector(cls, values) -> "ProductPosition":
        values = np.asarray(values, dtype=float)
        half = values.size // 2
        return cls(values[:half], values[half:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.survival, self.default])


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    restriction: ProbabilityWeights
    discount: DiscountFactor
    default_measure: ProbabilityWeights
    density: np.ndarray
    degenerate: bool = False

    @property
    def discounted_mass(self) -> float:
        """Q(D), the mass carried by the survival leg."""
        return float(self.restriction.weights @ self.discount.values)

    def pair(self, p: ProductPosition) -> float:
        """E_{Q~}[X~] = Q(D X1) + (1 - Q(D)) Qbar(X0)."""
        survival = float(self.restriction.weights @ (self.discount.values * p.survival))
        if self.degenerate:
            return survival
        return survival + (1.0 - self.discounted_mass) * float(self.default_measure.weights @ p.default)


def decompose_measure(q, d) -> ProductMeasure:
    """Build Qbar and the density (1 - D) / (1 - Q(D)); Q(D) = 1 is flagged degenerate."""
    q = q if isinstance(q, ProbabilityWeights) else ProbabilityWeights(q)
    d = d if isinstance(d, DiscountFactor) else DiscountFactor(d)
    if q.size != d.size:
        raise ValidationError(f"measure has {q.size} atoms, discount has {d.size}")
    survival_mass = float(q.weights @ d.values)
    if 1.0 - survival_mass <= config.TOLERANCE_CONFIG["probability"]:
        return ProductMeasure(q, d, q, np.ones(q.size), degenerate=True)
    density = (1.0 - d.values) / (1.0 - survival_mass)
    qbar = ProbabilityWeights.normalized(density * q.weights)
    measure = ProductMeasure(q, d, qbar, density)
    # consistency Q(Y) = Q(D Y) + (1 - Q(D)) Qbar(Y) on the canonical basis
    rebuilt = q.weights * d.values + (1.0 - survival_mass) * qbar.weights
    if np.max(np.abs(rebuilt - q.weights)) > config.TOLERANCE_CONFIG["probability"]:
        raise ValidationError("product measure decomposition is inconsistent on the canonical basis")
    return measure


def measure_from_subprob(mu, qbar) -> tuple[ProbabilityWeights, DiscountFactor]:
    """Inverse map: Q = mu + (1 - |mu|) Qbar and D = mu / Q, so that D Q = mu."""
    weights = weights_of(mu)
    qbar = qbar if isinstance(qbar, ProbabilityWeights) else ProbabilityWeights(qbar)
    q = weights + (1.0 - float(np.sum(weights))) * qbar.weights
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(q > 0.0, weights / q, 1.0)
    return ProbabilityWeights.normalized(q), DiscountFactor(np.clip(d, 0.0, 1.0))


def tilde_rho(reserve: Callable[[np.ndarray], float], rhobar: RiskMeasureSpec, p: ProductPosition) -> float:
    """R(X1 + rhobar(X0) 1) + rhobar(X0)."""
    shift = evaluate_rho(rhobar, p.default)
    return reserve(p.survival + shift) + shift


def rho_r_rhobar(reserve: Callable[[np.ndarray], float], rhobar: RiskMeasureSpec, x) -> float:
    """The cash additive measure tilde_rho(X, X)."""
    return tilde_rho(reserve, rhobar, ProductPosition.diagonal(x))


def _as_penalty_fn(penalty) -> PenaltyFn:
    if isinstance(penalty, (PenaltyTable, SubPenaltyTable)):
        return penalty.lookup
    if callable(penalty):
        return penalty
    return lambda q: minimal_penalty(penalty, ProbabilityWeights.normalized(weights_of(q)))


def tilde_penalty(alpha_r, alphabar, q, d) -> float:
    """alpha^R(D Q) + (1 - Q(D)) alphabar(Qbar), with 0 * inf = 0."""
    measure = decompose_measure(q, d)
    first = _as_penalty_fn(alpha_r)(measure.discount.values * measure.restriction.weights)
    if measure.degenerate:
        return float(first)
    second = _as_penalty_fn(alphabar)(measure.default_measure.weights)
    return float(first + (1.0 - measure.discounted_mass) * second)


@dataclass(frozen=True)
class ProjectionResult:
    value: float
    discount: np.ndarray | None
    default_measure: np.ndarray | None
    grid_step: float
    feasible: bool


def penalty_projection(
    alpha_r,
    alphabar,
    q,
    d_grid: GridSpec | np.ndarray,
    qbar_grid: np.ndarray | None = None,
    consistency_tol: float | None = None,
) -> ProjectionResult:
    """Grid infimum over (D, Qbar) consistent with Q of the product penalty; an upper bound.

    Without a Qbar grid the default-leg measure is the one implied by (Q, D);
    with one, pairs are kept when Qbar is within `consistency_tol` of it.
    """
    q = q if isinstance(q, ProbabilityWeights) else ProbabilityWeights(q)
    if isinstance(d_grid, GridSpec):
        step = d_grid.unit_step
        discounts = box_grid_matrix(np.zeros(q.size), np.ones(q.size), d_grid.resolution)
    else:
        discounts = np.atleast_2d(np.asarray(d_grid, dtype=float))
        step = math.nan
    if qbar_grid is not None and consistency_tol is None:
        consistency_tol = step if math.isfinite(step) else config.TOLERANCE_CONFIG["closed_form"]
    penalty_r = _as_penalty_fn(alpha_r)
    penalty_bar = _as_penalty_fn(alphabar)
    best = ProjectionResult(math.inf, None, None, step, False)
    for d in discounts:
        measure = decompose_measure(q, d)
        first = penalty_r(d * q.weights)
        if measure.degenerate:
            options = [(measure.default_measure.weights, 0.0)]
        elif qbar_grid is None:
            options = [(measure.default_measure.weights, 1.0 - measure.discounted_mass)]
        else:
            implied = measure.default_measure.weights
            close = np.max(np.abs(qbar_grid - implied), axis=1) <= consistency_tol
            options = [(row, 1.0 - measure.discounted_mass) for row in qbar_grid[close]]
        for qbar, weight in options:
            second = 0.0 if weight == 0.0 else weight * penalty_bar(qbar)
            total = first + second
            if total < best.value:
                best = ProjectionResult(float(total), d.copy(), np.asarray(qbar).copy(), step, True)
    return best


def tilde_dual_objective(alpha_r, alphabar, q, d, x) -> float:
    """E_Q[-D X] - alpha~(Q, D), the dual integrand of R(X) = tilde_rho(X, 0)."""
    q = q if isinstance(q, ProbabilityWeights) else ProbabilityWeights(q)
    d_values = np.asarray(getattr(d, "values", d), dtype=float)
    penalty = tilde_penalty(alpha_r, alphabar, q, d_values)
    if math.isinf(penalty):
        return -math.inf
    return float(q.weights @ (-d_values * np.asarray(x, dtype=float))) - penalty


def tilde_dual_sup(alpha_r, alphabar, x, q_grid: GridSpec, d_grid: GridSpec) -> tuple[float, np.ndarray | None, np.ndarray | None]:
    """Brute-force sup of the product dual over a simplex Q-grid and a per-atom D-grid."""
    x = np.asarray(x, dtype=float)
    best = (-math.inf, None, None)
    discounts = box_grid_matrix(np.zeros(x.size), np.ones(x.size), d_grid.resolution)
    for q in simplex_grid_matrix(x.size, q_grid):
        for d in discounts:
            value = tilde_dual_objective(alpha_r, alphabar, q, d, x)
            if value > best[0]:
                best = (value, q, d)
    return best


def conditional_from_V(v: ConvexDiscountFunction, p: ProductPosition) -> np.ndarray:
    """rho~^V(X1, X0) = V(X1 - X0) - X0, atomwise."""
    if p.survival.size != v.size:
        raise ValidationError(f"discount function has {v.size} atoms, position has {p.survival.size}")
    return v(p.survival - p.default) - p.default


def discount_values_from_conditional(
    conditional: Callable[[ProductPosition], np.ndarray],
    n: int,
    x_grid,
) -> pd.DataFrame:
    """Read V back from a conditional measure: V(omega, x) = conditional(x 1, 0)_omega."""
    xs = np.asarray(x_grid, dtype=float)
    rows = [conditional(ProductPosition.survival_only(np.full(n, value))) for value in xs]
    return pd.DataFrame(np.vstack(rows), index=pd.Index(xs, name="x"), columns=[f"w{i}" for i in range(n)])


def composed_check(rho: RiskMeasureSpec, v: ConvexDiscountFunction, p: ProductPosition, tol: float | None = None) -> CheckReport:
    """rho(-V(X1 - X0) + X0) = rho(-rho~^V(X1, X0)), with the survival and diagonal restrictions."""
    tol = config.TOLERANCE_CONFIG["probability"] if tol is None else tol
    direct = evaluate_rho(rho, -v(p.survival - p.default) + p.default)
    conditional = evaluate_rho(rho, -conditional_from_V(v, p))
    survival = evaluate_rho(rho, -conditional_from_V(v, ProductPosition.survival_only(p.survival)))
    composed = compose_with_convex(rho, v, p.survival)
    diagonal = evaluate_rho(rho, -conditional_from_V(v, ProductPosition.diagonal(p.survival)))
    plain = evaluate_rho(rho, p.survival)
    gaps = {
        "conditional": abs(direct - conditional),
        "survival_restriction": abs(survival - composed),
        "diagonal_restriction": abs(diagonal - plain),
    }
    failing = [name for name, gap in gaps.items() if gap > tol]
    details = {"value": direct, **gaps}
    return CheckReport.from_flag("composition", not failing, details, failing[0] if failing else None)
