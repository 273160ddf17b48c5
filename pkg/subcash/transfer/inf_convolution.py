"""Optimal risk transfer between two agents by inf-convolution of their reserves.

R_{A,B}(Psi) = inf_F R_A(Psi - F) + R_B(F); agent B takes F = X^B + H and
charges the indifference price of the contract H.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

import config
from ..core.grids import GridSpec, position_grid_matrix
from ..core.scenario import as_position, as_vector
from ..errors import UnboundedProblemError
from ..evaluation.checks import CheckReport
from ..measures.subadditive import hat_functional
from ..utils.run_logging import RunLogger
from .descent import DescentConfig, coordinate_descent, grid_minimize, minimize_with_restarts

logger = logging.getLogger(__name__)

Reserve = Callable[[np.ndarray], float]


@dataclass(frozen=True, eq=False)
class TransferProblem:
    exposure_a: np.ndarray
    exposure_b: np.ndarray
    measure_a: Reserve
    measure_b: Reserve

    def __post_init__(self) -> None:
        exposure_a = as_vector(self.exposure_a, name="exposure A")
        exposure_b = as_vector(self.exposure_b, name="exposure B", size=exposure_a.size)
        object.__setattr__(self, "exposure_a", exposure_a)
        object.__setattr__(self, "exposure_b", exposure_b)

    @property
    def aggregate(self) -> np.ndarray:
        return self.exposure_a + self.exposure_b


@dataclass(frozen=True, eq=False)
class InfConvolution:
    value: float
    minimizer: np.ndarray
    unique: bool
    diagnostics: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class TransferSolution:
    contract: np.ndarray
    price: float
    residual: float
    diagnostics: dict[str, Any] = field(default_factory=dict)


def indifference_price(measure_b: Reserve, exposure_b, h) -> float:
    """pi(H) = R_B(X^B) - R_B(X^B + H)."""
    exposure_b = as_position(exposure_b)
    h = as_position(h, exposure_b.size)
    return float(measure_b(exposure_b) - measure_b(exposure_b + h))


def convolution_objective(measure_a: Reserve, measure_b: Reserve, psi) -> Callable[[np.ndarray], float]:
    psi = np.asarray(psi, dtype=float)
    return lambda f: float(measure_a(psi - f) + measure_b(f))


def _search_radius(cfg: DescentConfig, *vectors: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(v))) for v in vectors)
    return max(cfg.initial_radius, config.GRID_CONFIG["truncation_multiplier"] * scale)


def _certify_resolution(n: int) -> int:
    if n <= 2:
        return config.SOLVER_CONFIG["certify_resolution"]
    return max(3, config.SOLVER_CONFIG["certify_resolution"] // 3)


def inf_convolution(
    measure_a: Reserve,
    measure_b: Reserve,
    psi,
    search: DescentConfig | GridSpec | None = None,
    starts: Sequence[np.ndarray] | None = None,
) -> InfConvolution:
    """Minimize R_A(Psi - F) + R_B(F) over F.

    With a GridSpec the exhaustive grid minimum is returned (an upper bound
    within the mesh bound). Otherwise coordinate descent runs from each start
    (default 0, Psi/2, Psi); for n <= 3 a coarse grid certifies the result
    and seeds one more descent when it does better.
    """
    psi = as_position(psi)
    objective = convolution_objective(measure_a, measure_b, psi)
    n = psi.size
    if isinstance(search, GridSpec):
        found = grid_minimize(objective, n, search)
        return InfConvolution(found.value, found.argmin, False, {"method": "grid", "mesh_bound": found.mesh_bound})
    cfg = search or DescentConfig()
    starts = [np.zeros(n), psi / 2.0, psi.copy()] if starts is None else [as_position(s, n) for s in starts]
    radius = _search_radius(cfg, psi, *starts)
    with RunLogger("inf_convolution", verbose=True, heartbeat_seconds=0) as run:
        best = minimize_with_restarts(objective, starts, cfg, radius)
        diagnostics: dict[str, Any] = {"method": "descent", "sweeps": best.sweeps, "start_index": best.start_index, "restarts": len(starts)}
        if cfg.certify and n <= config.SOLVER_CONFIG["certify_max_atoms"]:
            grid = GridSpec(_certify_resolution(n), radius / 2.0)
            found = grid_minimize(objective, n, grid)
            diagnostics.update({"grid_value": found.value, "mesh_bound": found.mesh_bound})
            if found.value < best.value - cfg.tolerance:
                run.step(f"grid value {found.value:.12g} beats descent {best.value:.12g}; reseeding")
                reseeded = coordinate_descent(objective, found.argmin, cfg, radius)
                if reseeded.value < best.value:
                    best = reseeded
                    diagnostics["reseeded"] = True
    return InfConvolution(best.value, best.argmin, best.unique, diagnostics)


def convolution_functional(measure_a: Reserve, measure_b: Reserve, search: DescentConfig | GridSpec | None = None) -> Reserve:
    """Psi -> R_{A,B}(Psi) as a reserve functional."""
    return lambda psi: inf_convolution(measure_a, measure_b, psi, search).value


def solve_transfer(problem: TransferProblem, search: DescentConfig | GridSpec | None = None) -> TransferSolution:
    """H* = F* - X^B, price by indifference, residual = R_{A,B}(X^A + X^B)."""
    psi = problem.aggregate
    starts = [np.zeros(psi.size), problem.exposure_b.copy(), psi / 2.0]
    result = inf_convolution(problem.measure_a, problem.measure_b, psi, search, starts=None if isinstance(search, GridSpec) else starts)
    contract = result.minimizer - problem.exposure_b
    price = indifference_price(problem.measure_b, problem.exposure_b, contract)
    standalone = problem.measure_a(problem.exposure_a) + problem.measure_b(problem.exposure_b)
    diagnostics = dict(result.diagnostics)
    diagnostics.update({"standalone": float(standalone), "unique": result.unique})
    if result.value > standalone + config.TOLERANCE_CONFIG["closed_form"]:
        logger.warning("residual %.12g exceeds the no-transfer reserve %.12g", result.value, standalone)
    return TransferSolution(contract, price, result.value, diagnostics)


def penalty_sum_check(
    pen_a: Callable[[np.ndarray], float],
    pen_b: Callable[[np.ndarray], float],
    conv_value_fn: Reserve,
    mu_grid: np.ndarray,
    position_grid: GridSpec,
) -> CheckReport:
    """Brute-force penalty of R_{A,B} against alpha_A + alpha_B on the rows of `mu_grid`.

    The gap is measured where the sum is finite; rows where it is infinite are
    counted. A problem with R_{A,B}(0) = -inf is reported as skipped.
    """
    mus = np.atleast_2d(np.asarray(mu_grid, dtype=float))
    n = mus.shape[1]
    try:
        at_zero = conv_value_fn(np.zeros(n))
    except UnboundedProblemError as exc:
        return CheckReport.skipped("penalty_sum", "R_{A,B}(0) > -inf fails: the inf-convolution is unbounded below", {"error": str(exc)})
    positions = position_grid_matrix(n, position_grid)
    conv_values = np.array([conv_value_fn(x) for x in positions])
    brute = np.max(-mus @ positions.T - conv_values[None, :], axis=1)
    sums = np.array([pen_a(mu) + pen_b(mu) for mu in mus])
    finite = np.isfinite(sums)
    gaps = np.abs(brute[finite] - sums[finite])
    max_gap = float(np.max(gaps)) if gaps.size else 0.0
    mesh_bound = 2.0 * position_grid.step
    details = {
        "max_gap": max_gap,
        "mesh_bound": mesh_bound,
        "finite_entries": int(finite.sum()),
        "infinite_entries": int((~finite).sum()),
        "value_at_zero": float(at_zero),
    }
    witness = mus[finite][int(np.argmax(gaps))].tolist() if gaps.size else None
    return CheckReport.from_flag("penalty_sum", max_gap <= mesh_bound, details, witness)


def hat_equivalence_check(
    measure_a: Reserve,
    measure_b: Reserve,
    psi,
    search: DescentConfig | None = None,
    tol: float = 1e-6,
) -> CheckReport:
    """inf over (F, x) of rho_hat_A((Psi, 0) - (F, x)) + rho_hat_B((F, x)) against R_{A,B}(Psi)."""
    psi = as_position(psi)
    cfg = search or DescentConfig()
    hat_a, hat_b = hat_functional(measure_a), hat_functional(measure_b)
    lifted = np.append(psi, 0.0)
    objective = lambda z: float(hat_a(lifted - z) + hat_b(z))
    n = psi.size
    direct = inf_convolution(measure_a, measure_b, psi, cfg)
    starts = [np.zeros(n + 1), lifted / 2.0, lifted.copy(), np.append(direct.minimizer, 0.0)]
    extended = minimize_with_restarts(objective, starts, cfg, _search_radius(cfg, lifted))
    gap = abs(extended.value - direct.value)
    details = {"extended": extended.value, "direct": direct.value, "gap": gap}
    return CheckReport.from_flag("hat_equivalence", gap <= tol, details, gap)
