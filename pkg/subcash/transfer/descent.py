"""Coordinate descent for convex objectives on R^n.

Each sweep runs a bounded Brent (golden-section) line search along every
coordinate and along the all-ones direction. A line search whose minimizer
keeps landing on the edge of its bracket after the configured number of
bracket doublings is treated as a ray of unbounded decrease.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

import config
from ..core.grids import GridSpec, position_grid_matrix
from ..errors import NumericError, UnboundedProblemError

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class DescentConfig:
    tolerance: float = config.SOLVER_CONFIG["tolerance"]
    max_sweeps: int = config.SOLVER_CONFIG["max_sweeps"]
    line_tolerance: float = config.SOLVER_CONFIG["line_tolerance"]
    box_doublings: int = config.SOLVER_CONFIG["box_doublings"]
    initial_radius: float = config.SOLVER_CONFIG["initial_radius"]
    uniqueness_step: float = config.SOLVER_CONFIG["uniqueness_step"]
    certify: bool = True


@dataclass(frozen=True)
class DescentResult:
    value: float
    argmin: np.ndarray
    sweeps: int
    converged: bool
    unique: bool
    start_index: int = 0


@dataclass(frozen=True)
class GridMinimum:
    value: float
    argmin: np.ndarray
    mesh_bound: float


def _line_minimize(phi: Callable[[float], float], current: float, radius: float, cfg: DescentConfig) -> tuple[float, float]:
    """Minimize phi(t) over t near 0; returns (t, phi(t)) with t = 0 when nothing improves."""
    for _ in range(cfg.box_doublings + 1):
        result = minimize_scalar(phi, bounds=(-radius, radius), method="bounded", options={"xatol": cfg.line_tolerance})
        t, value = float(result.x), float(result.fun)
        if not value < current - cfg.tolerance:
            return 0.0, current
        if radius - abs(t) > 1e-6 * radius:
            return t, value
        # flat beyond the bracket edge, not a ray of decrease
        halfway = float(phi(t / 2.0))
        if halfway <= value + cfg.tolerance and halfway < current - cfg.tolerance:
            return t / 2.0, halfway
        radius *= 2.0
    raise UnboundedProblemError(
        f"objective keeps decreasing after {cfg.box_doublings} doublings of the search box",
        best_value=value,
    )


def coordinate_descent(objective: Objective, x0: Sequence[float], cfg: DescentConfig | None = None, radius: float | None = None) -> DescentResult:
    cfg = cfg or DescentConfig()
    x = np.array(x0, dtype=float)
    n = x.size
    radius = radius or cfg.initial_radius
    value = float(objective(x))
    ones = np.ones(n)
    directions = [np.eye(n)[i] for i in range(n)] + ([ones] if n > 1 else [])
    for sweep in range(1, cfg.max_sweeps + 1):
        start_value = value
        for direction in directions:
            base = x.copy()
            t, new_value = _line_minimize(lambda s: float(objective(base + s * direction)), value, radius, cfg)
            if t != 0.0:
                x = base + t * direction
                value = new_value
        if start_value - value <= cfg.tolerance:
            return DescentResult(value, x, sweep, True, _is_unique(objective, x, value, directions, cfg))
    raise NumericError(f"coordinate descent did not converge in {cfg.max_sweeps} sweeps", best_iterate=x, best_value=value)


def _is_unique(objective: Objective, x: np.ndarray, value: float, directions: list[np.ndarray], cfg: DescentConfig) -> bool:
    """False when a small step along a search direction leaves the value unchanged."""
    delta = cfg.uniqueness_step
    for direction in directions:
        for sign in (1.0, -1.0):
            if float(objective(x + sign * delta * direction)) <= value + cfg.tolerance:
                return False
    return True


def minimize_with_restarts(
    objective: Objective,
    starts: Sequence[np.ndarray],
    cfg: DescentConfig | None = None,
    radius: float | None = None,
) -> DescentResult:
    """Descent from each start in a thread pool; the lowest value wins, ties go to the earliest start."""
    cfg = cfg or DescentConfig()
    workers = max(1, min(int(config.MAX_WORKERS), len(starts)))

    def _run(indexed: tuple[int, np.ndarray]) -> DescentResult | NumericError:
        index, start = indexed
        try:
            result = coordinate_descent(objective, start, cfg, radius)
        except UnboundedProblemError:
            raise
        except NumericError as exc:
            logger.warning("restart %d did not converge: %s", index, exc)
            return exc
        return DescentResult(result.value, result.argmin, result.sweeps, result.converged, result.unique, index)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(_run, enumerate(starts)))
    results = [outcome for outcome in outcomes if isinstance(outcome, DescentResult)]
    if not results:
        failure = min(outcomes, key=lambda exc: math.inf if exc.best_value is None else exc.best_value)
        raise NumericError("no restart converged", best_iterate=failure.best_iterate, best_value=failure.best_value)
    best = results[0]
    for result in results[1:]:
        if result.value < best.value - cfg.tolerance:
            best = result
    logger.debug("best restart %d of %d, value %.12g", best.start_index, len(starts), best.value)
    return best


def grid_minimize(objective: Objective, n: int, grid: GridSpec, lipschitz: float = 2.0) -> GridMinimum:
    """Exhaustive minimum on [-M, M]^n; the mesh bound assumes sup-norm Lipschitz `lipschitz`."""
    best_value = math.inf
    best_point = np.zeros(n)
    for point in position_grid_matrix(n, grid):
        value = float(objective(point))
        if value < best_value:
            best_value, best_point = value, point
    return GridMinimum(best_value, best_point, lipschitz * grid.step / 2.0)
