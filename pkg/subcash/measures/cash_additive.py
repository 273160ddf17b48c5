"""Convex cash additive base measures, their minimal penalties and duality."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp, rel_entr

import config
from ..core.grids import GridSpec, position_grid_matrix, simplex_grid_matrix
from ..core.scenario import ProbabilityWeights, as_position, weights_of
from ..errors import ValidationError
from ..evaluation.checks import CheckReport
from .penalties import PenaltyTable, table_maximum

logger = logging.getLogger(__name__)


def _as_weights(value) -> ProbabilityWeights:
    return value if isinstance(value, ProbabilityWeights) else ProbabilityWeights(value)


@dataclass(frozen=True)
class WorstCase:
    """rho(X) = max_i(-X_i)."""


@dataclass(frozen=True, eq=False)
class Linear:
    base: ProbabilityWeights

    def __post_init__(self) -> None:
        object.__setattr__(self, "base", _as_weights(self.base))


@dataclass(frozen=True, eq=False)
class Entropic:
    base: ProbabilityWeights
    temperature: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "base", _as_weights(self.base))
        if not math.isfinite(self.temperature) or self.temperature <= 0.0:
            raise ValidationError(f"entropic temperature must be positive, got {self.temperature!r}")


@dataclass(frozen=True, eq=False)
class RobustFamily:
    members: tuple[tuple[ProbabilityWeights, float], ...]

    def __post_init__(self) -> None:
        members = tuple((_as_weights(q), float(penalty)) for q, penalty in self.members)
        if not members:
            raise ValidationError("a robust family needs at least one member")
        sizes = {q.size for q, _ in members}
        if len(sizes) != 1:
            raise ValidationError(f"robust family members have mixed sizes {sorted(sizes)}")
        for _, penalty in members:
            if not math.isfinite(penalty) or penalty < 0.0:
                raise ValidationError(f"robust family penalties must be finite and >= 0, got {penalty!r}")
        object.__setattr__(self, "members", members)

    @property
    def measures(self) -> np.ndarray:
        return np.vstack([q.weights for q, _ in self.members])

    @property
    def penalties(self) -> np.ndarray:
        return np.array([penalty for _, penalty in self.members])


RiskMeasureSpec = WorstCase | Linear | Entropic | RobustFamily


def spec_size(spec: RiskMeasureSpec) -> int | None:
    match spec:
        case WorstCase():
            return None
        case Linear(base=base) | Entropic(base=base):
            return base.size
        case RobustFamily():
            return spec.members[0][0].size
    raise ValidationError(f"unknown risk measure spec {spec!r}")


def evaluate_many(spec: RiskMeasureSpec, positions: np.ndarray) -> np.ndarray:
    """Evaluate rho row-wise on a (k, n) matrix of positions."""
    rows = np.atleast_2d(np.asarray(positions, dtype=float))
    size = spec_size(spec)
    if size is not None and rows.shape[1] != size:
        raise ValidationError(f"dimension mismatch: measure on {size} atoms, position of length {rows.shape[1]}")
    match spec:
        case WorstCase():
            return np.max(-rows, axis=1)
        case Linear(base=base):
            return rows @ (-base.weights)
        case Entropic(base=base, temperature=gamma):
            return gamma * logsumexp(-rows / gamma, axis=1, b=base.weights)
        case RobustFamily():
            return np.max(-rows @ spec.measures.T - spec.penalties, axis=1)
    raise ValidationError(f"unknown risk measure spec {spec!r}")


def evaluate_rho(spec: RiskMeasureSpec, x) -> float:
    return float(evaluate_many(spec, as_position(x)[None, :])[0])


def as_functional(spec: RiskMeasureSpec) -> Callable[[np.ndarray], float]:
    return lambda x: evaluate_rho(spec, x)


def grid_penalty_bound(functional: Callable[[np.ndarray], float], weights, grid: GridSpec) -> float:
    """sup over a truncated position grid of w(-X) - f(X); a lower bound of the conjugate."""
    w = weights_of(weights)
    best = -math.inf
    for x in position_grid_matrix(w.size, grid):
        best = max(best, float(w @ -x) - functional(x))
    return best


def _robust_penalty(spec: RobustFamily, q: np.ndarray) -> float:
    # alpha(q) = min sum_j lam_j alpha_j over lam in the simplex with sum_j lam_j Q_j = q
    measures = spec.measures
    result = linprog(
        c=spec.penalties,
        A_eq=np.vstack([measures.T, np.ones(len(spec.members))]),
        b_eq=np.append(q, 1.0),
        bounds=[(0.0, None)] * len(spec.members),
        method="highs",
    )
    if result.status == 2:
        return math.inf
    if not result.success:
        logger.warning("robust penalty LP ended with status %s: %s", result.status, result.message)
        return math.inf
    return float(result.fun)


def minimal_penalty(spec: RiskMeasureSpec, q, grid: GridSpec | None = None) -> float:
    """alpha(q) = sup_X E_q[-X] - rho(X).

    Without `grid` the value is the closed form of the shipped kind (the robust
    family solves a small LP). With `grid` it is the supremum over that position
    grid only, a lower bound of the closed form.
    """
    weights = _as_weights(q).weights
    size = spec_size(spec)
    if size is not None and weights.size != size:
        raise ValidationError(f"dimension mismatch: measure on {size} atoms, weights of length {weights.size}")
    if grid is not None:
        return grid_penalty_bound(as_functional(spec), weights, grid)
    match spec:
        case WorstCase():
            return 0.0
        case Linear(base=base):
            return 0.0 if base.close_to(weights) else math.inf
        case Entropic(base=base, temperature=gamma):
            return float(gamma * np.sum(rel_entr(weights, base.weights)))
        case RobustFamily():
            return _robust_penalty(spec, weights)
    raise ValidationError(f"unknown risk measure spec {spec!r}")


def build_penalty_table(spec: RiskMeasureSpec, n: int, grid: GridSpec) -> PenaltyTable:
    """Minimal penalty on every probability vector of a simplex grid."""
    measures = simplex_grid_matrix(n, grid)
    penalties = np.array([minimal_penalty(spec, row) for row in measures])
    return PenaltyTable(measures, penalties, grid, exact=False)


def exact_penalty_table(spec: RiskMeasureSpec, n: int) -> PenaltyTable:
    """A finite table whose dual maximum reproduces rho exactly."""
    match spec:
        case WorstCase():
            return PenaltyTable(np.eye(n), np.zeros(n), exact=True)
        case Linear(base=base):
            return PenaltyTable(base.weights[None, :], [0.0], exact=True)
        case RobustFamily():
            return PenaltyTable(spec.measures, spec.penalties, exact=True)
        case Entropic():
            raise ValidationError("the entropic measure has no finite exact penalty table; use build_penalty_table")
    raise ValidationError(f"unknown risk measure spec {spec!r}")


def dual_evaluate(pen: PenaltyTable, x) -> float:
    value, _ = table_maximum(pen, as_position(x, pen.size))
    return value


def check_calibration(
    spec: RiskMeasureSpec,
    w,
    lambdas: Sequence[float] = config.CALIBRATION_LAMBDAS,
    positions: Sequence[np.ndarray] = (),
    tol: float | None = None,
) -> CheckReport:
    """rho(lam w) = lam rho(w) for each lambda, and rho(X + w) = rho(X) + rho(w) on each of `positions`."""
    tol = config.TOLERANCE_CONFIG["closed_form"] if tol is None else tol
    w = as_position(w)
    rho_w = evaluate_rho(spec, w)
    homogeneity = []
    for lam in lambdas:
        gap = abs(evaluate_rho(spec, lam * w) - lam * rho_w)
        if gap > tol:
            homogeneity.append({"lambda": float(lam), "gap": gap})
    invariance = []
    for x in positions:
        x = as_position(x, w.size)
        gap = abs(evaluate_rho(spec, x + w) - evaluate_rho(spec, x) - rho_w)
        if gap > tol:
            invariance.append({"x": x.tolist(), "gap": gap})
    ok = not homogeneity and not invariance
    witness = (homogeneity or invariance or [None])[0]
    details = {"rho_w": rho_w, "lambda_failures": homogeneity, "invariance_failures": invariance}
    return CheckReport.from_flag("calibration", ok, details, witness)
