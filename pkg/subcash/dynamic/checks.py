"""Structural checks on lattice BSDE solutions and the dual control of the ambiguous rate."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

import config
from ..errors import ValidationError
from ..evaluation.checks import CheckReport
from .bsde import BsdeSolution, backward_induction, discounted_expectation, solve_bsde
from .generators import AmbiguousRate, CustomGenerator, GeneratorSpec, LinearRate, sample_check
from .lattice import Lattice

logger = logging.getLogger(__name__)


def _first_violation(upper: BsdeSolution, lower: BsdeSolution, tol: float) -> tuple[float, tuple[int, int, float, float] | None]:
    worst, witness = 0.0, None
    for step in range(upper.first_step, upper.last_step + 1):
        gap = lower.layer(step) - upper.layer(step)
        j = int(np.argmax(gap))
        if gap[j] > worst:
            worst = float(gap[j])
            if worst > tol:
                witness = (step, j, float(upper.layer(step)[j]), float(lower.layer(step)[j]))
    return worst, witness


def comparison_check(g1: GeneratorSpec, g2: GeneratorSpec, term1, term2, lattice: Lattice, tol: float | None = None) -> CheckReport:
    """Y1 >= Y2 nodewise, given term1 >= term2 and g1 >= g2 along solution 2."""
    tol = config.TOLERANCE_CONFIG["dynamic_exact"] if tol is None else tol
    term1 = lattice.terminal_values(term1, "terminal 1")
    term2 = lattice.terminal_values(term2, "terminal 2")
    if np.any(term1 < term2):
        j = int(np.argmin(term1 - term2))
        return CheckReport.skipped("comparison", "precondition failed: terminal 1 < terminal 2", {"node": [lattice.steps, j]})

    second = solve_bsde(lattice, g2, term2)
    for step in range(lattice.steps):
        y, z = second.layer(step), second.control(step)
        shortfall = np.asarray(g2(step, y, z)) - np.asarray(g1(step, y, z))
        if np.any(shortfall > tol):
            j = int(np.argmax(shortfall))
            return CheckReport.skipped("comparison", "precondition failed: g1 < g2 on solution 2", {"node": [step, j]})

    first = solve_bsde(lattice, g1, term1)
    worst, witness = _first_violation(first, second, tol)
    return CheckReport.from_flag("comparison", witness is None, {"max_violation": worst}, witness)


def dynamic_subadditivity_check(g: GeneratorSpec, x, m_grid, lattice: Lattice, tol: float | None = None) -> CheckReport:
    """m -> Y_t(-(X + m)) + m is nondecreasing at every node."""
    tol = config.TOLERANCE_CONFIG["dynamic_monotonicity"] if tol is None else tol
    m_grid = np.asarray(m_grid, dtype=float)
    if m_grid.ndim != 1 or m_grid.size < 2 or np.any(np.diff(m_grid) <= 0.0):
        raise ValidationError("m-grid must be strictly increasing with at least two points")
    if not g.decreasing_in_y:
        return CheckReport.skipped("dynamic_subadditivity", "precondition failed: generator not decreasing in y")
    if isinstance(g, CustomGenerator):
        sampled = sample_check(g, lattice.steps, np.linspace(-10.0, 10.0, 21), (-1.0, 0.0, 1.0))
        if not sampled.passed:
            return CheckReport.skipped("dynamic_subadditivity", "precondition failed: generator sample check", sampled.details)

    x = lattice.terminal_values(x, "position")
    previous: BsdeSolution | None = None
    worst, spread = 0.0, 0.0
    for k, m in enumerate(m_grid):
        shifted = solve_bsde(lattice, g, -(x + m))
        current = tuple(layer + m for layer in shifted.values)
        if previous is not None:
            for step, (before, after) in enumerate(zip(previous, current)):
                drop = before - after
                j = int(np.argmax(drop))
                spread = max(spread, float(np.max(np.abs(drop))))
                if drop[j] > worst:
                    worst = float(drop[j])
                    if worst > tol:
                        return CheckReport.from_flag(
                            "dynamic_subadditivity", False, {"max_decrease": worst}, (float(m_grid[k - 1]), float(m), step, j)
                        )
        previous = current
    return CheckReport.from_flag("dynamic_subadditivity", True, {"max_decrease": worst, "max_variation": spread})


def time_consistency_check(g: GeneratorSpec, terminal, t1: int, t2: int, lattice: Lattice, tol: float | None = None) -> CheckReport:
    """Y_t1(X) equals Y_t1 of the layer-t2 values used as a new terminal."""
    tol = config.TOLERANCE_CONFIG["dynamic_exact"] if tol is None else tol
    if not 0 <= t1 < t2 <= lattice.steps:
        raise ValidationError(f"need 0 <= t1 < t2 <= {lattice.steps}, got t1={t1}, t2={t2}")
    terminal = lattice.terminal_values(terminal)
    direct = solve_bsde(lattice, g, terminal)
    stage = backward_induction(lattice, g, terminal, stop_step=t2)
    staged = backward_induction(lattice, g, stage.layer(t2), start_step=t2, stop_step=t1)
    gap = np.abs(direct.layer(t1) - staged.layer(t1))
    j = int(np.argmax(gap))
    return CheckReport.from_flag("time_consistency", bool(gap[j] <= tol), {"max_gap": float(gap[j])}, (t1, j))


@dataclass(frozen=True, eq=False)
class DualControl:
    beta_bar: tuple[np.ndarray, ...]
    mu_bar: tuple[np.ndarray, ...]
    recomputed: tuple[np.ndarray, ...]
    max_gap: float
    report: CheckReport

    @property
    def recomputed_root(self) -> float:
        return float(self.recomputed[0][0])


def dual_control_recovery(solution: BsdeSolution, g: GeneratorSpec, tol: float | None = None) -> DualControl:
    """beta_bar = R where Y <= 0 and r where Y > 0; rediscounting the terminal with it reproduces Y."""
    tol = config.TOLERANCE_CONFIG["dual_control"] if tol is None else tol
    if solution.first_step != 0:
        raise ValidationError("dual control recovery needs a solution down to the root")
    lattice = solution.lattice
    if isinstance(g, AmbiguousRate):
        def control(step: int, y: np.ndarray) -> np.ndarray:
            r, big_r = g.rates(step)
            return np.where(y <= 0.0, big_r, r)
    elif isinstance(g, LinearRate):
        def control(step: int, y: np.ndarray) -> np.ndarray:
            return np.full(y.shape, g.rate(step))
    else:
        raise ValidationError(f"dual control recovery supports ambiguous and linear rates, not {type(g).__name__}; use fenchel_G")

    dt = lattice.dt
    beta_bar = [control(step, solution.layer(step)) for step in range(lattice.steps)]
    current = solution.layer(lattice.steps)
    recomputed = [current]
    for step in range(lattice.steps - 1, -1, -1):
        current = Lattice.conditional_mean(current) / (1.0 + beta_bar[step] * dt)
        recomputed.append(current)
    recomputed.reverse()

    gaps = [np.abs(a - b) for a, b in zip(recomputed, solution.values)]
    worst_step = int(np.argmax([float(np.max(gap)) for gap in gaps]))
    max_gap = float(np.max(gaps[worst_step]))
    witness = (worst_step, int(np.argmax(gaps[worst_step])))
    report = CheckReport.from_flag("dual_control", max_gap <= tol, {"max_gap": max_gap}, witness)
    mu_bar = tuple(np.zeros(step + 1) for step in range(lattice.steps))
    return DualControl(tuple(beta_bar), mu_bar, tuple(recomputed), max_gap, report)


def dual_domination_check(g: AmbiguousRate, terminal, lattice: Lattice, betas, tol: float | None = None) -> CheckReport:
    """Y_0 >= the root discounted at every constant beta in [r, R]."""
    tol = config.TOLERANCE_CONFIG["dynamic_monotonicity"] if tol is None else tol
    root = solve_bsde(lattice, g, terminal).root
    low, high = float(np.max(g.low)), float(np.min(g.high))
    worst, witness = -math.inf, None
    for beta in betas:
        if not low <= beta <= high:
            raise ValidationError(f"beta {beta} outside the admissible band [{low}, {high}]")
        excess = discounted_expectation(lattice, beta, terminal).root - root
        if excess > worst:
            worst, witness = excess, float(beta)
    return CheckReport.from_flag("dual_domination", worst <= tol, {"root": root, "max_excess": worst}, witness)


def fenchel_G(g: GeneratorSpec, step: int, beta: float, mu: float, y_grid=None, z_grid=None) -> float:
    """sup over (y, z) of -beta y - mu z - g(step, y, z).

    Exact for ambiguous and linear rates; a grid supremum for custom
    generators, floored by -|g(0, 0)| + mu^2 / (2k).
    """
    if isinstance(g, AmbiguousRate):
        r, big_r = g.rates(step)
        return 0.0 if mu == 0.0 and r <= beta <= big_r else math.inf
    if isinstance(g, LinearRate):
        return 0.0 if mu == 0.0 and abs(beta - g.rate(step)) <= config.TOLERANCE_CONFIG["dynamic_exact"] else math.inf
    if beta < 0.0 or beta > g.lipschitz_y:
        return math.inf
    if mu != 0.0 and g.quadratic == 0.0:
        return math.inf
    ys = np.linspace(-10.0, 10.0, 201) if y_grid is None else np.asarray(y_grid, dtype=float)
    zs = np.linspace(-10.0, 10.0, 201) if z_grid is None else np.asarray(z_grid, dtype=float)
    yy, zz = np.meshgrid(ys, zs, indexing="ij")
    surface = -beta * yy - mu * zz - np.asarray(g(step, yy, zz), dtype=float)
    grid_sup = float(np.max(surface))
    origin = float(np.asarray(g(step, np.zeros(1), np.zeros(1))).reshape(-1)[0])
    floor = -abs(origin) + (mu * mu / (2.0 * g.quadratic) if g.quadratic > 0.0 else 0.0)
    if grid_sup < floor:
        logger.debug("grid sup %.6g below the growth floor %.6g at beta=%g mu=%g; widen the grid", grid_sup, floor, beta, mu)
    return max(grid_sup, floor)
