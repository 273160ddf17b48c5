from __future__ import annotations

import argparse
import json
import logging
import math
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

import config

from ..core.scenario import ProbabilityWeights
from ..dynamic.bsde import solve_bsde
from ..dynamic.checks import comparison_check, dual_control_recovery, dynamic_subadditivity_check, time_consistency_check
from ..dynamic.generators import AmbiguousRate, LinearRate
from ..dynamic.lattice import affine_position, build_lattice
from ..measures.cash_additive import Linear
from ..measures.convex_discount import ConvexDiscountFunction, PiecewiseLinearConvex
from ..measures.spot_forward import BondQuote, DiscountFactor, check_forward_calibration, forward_from_spot, forward_measure, spot_from_forward
from ..measures.subadditive import (
    ComposedReserve,
    DiscountEnvelope,
    EnvelopeReserve,
    PutPremiumReserve,
    ambiguous_discount_reserve,
    check_cash_subadditive,
    grid_discount_reserve,
    put_premium,
)
from ..utils.helpers import setup_logging
from ..utils.run_logging import RunLogger
from .checks import check_convexity, check_monotonicity
from .reports import write_json

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = (42, 43, 44)
DEFAULT_OUTPUT = Path(config.ACCEPTANCE_DIR) / "summary.json"


def _random_probability(rng: np.random.Generator, n: int) -> ProbabilityWeights:
    return ProbabilityWeights.normalized(rng.dirichlet(np.ones(n)))


def _random_envelope(rng: np.random.Generator, n: int) -> DiscountEnvelope:
    a, b = rng.uniform(0.0, 1.0, n), rng.uniform(0.0, 1.0, n)
    return DiscountEnvelope(DiscountFactor(np.minimum(a, b)), DiscountFactor(np.maximum(a, b)))


def _random_convex(rng: np.random.Generator, n: int) -> ConvexDiscountFunction:
    pieces = []
    for _ in range(n):
        k = int(rng.integers(0, 4))
        breakpoints = np.sort(rng.choice(np.linspace(-5.0, 5.0, 41), size=k, replace=False))
        slopes = np.sort(rng.uniform(-1.0, 0.0, k + 1))
        pieces.append(PiecewiseLinearConvex(breakpoints, slopes))
    return ConvexDiscountFunction(tuple(pieces))


def envelope_criterion(rng: np.random.Generator, instances: int) -> dict[str, object]:
    """Closed form against the res-21 D-grid supremum, within the mesh bound."""
    failures = 0
    worst_excess = 0.0
    for _ in range(instances):
        n = int(rng.integers(2, 5))
        rho0, env = Linear(_random_probability(rng, n)), _random_envelope(rng, n)
        x = rng.uniform(-20.0, 20.0, n)
        closed = ambiguous_discount_reserve(rho0, env, x)
        found = grid_discount_reserve(rho0, env, x, 21)
        excess = max(found.value - closed, closed - found.value - found.mesh_bound)
        worst_excess = max(worst_excess, excess)
        failures += excess > 1e-12
    return {"instances": instances, "failures": int(failures), "max_excess": worst_excess}


def put_criterion(rng: np.random.Generator, instances: int) -> dict[str, object]:
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(2, 5))
        p, rate = _random_probability(rng, n), float(rng.uniform(1.0, 1.2))
        x = rng.uniform(-20.0, 20.0, n)
        reserve = PutPremiumReserve(p, rate).as_envelope()
        worst = max(worst, abs(put_premium(p, rate, x) - reserve(x)))
    return {"instances": instances, "failures": int(worst > 1e-12), "max_gap": worst}


def subadditivity_criterion(rng: np.random.Generator, instances: int) -> dict[str, object]:
    """Envelope, put and rho0(-V) reserves through the cash sub-additivity, convexity and monotonicity suites."""
    failures = 0
    m_grid = np.linspace(-10.0, 10.0, 11)
    for _ in range(instances):
        n = int(rng.integers(2, 5))
        p = _random_probability(rng, n)
        reserves = (
            EnvelopeReserve(Linear(p), _random_envelope(rng, n)),
            PutPremiumReserve(p, float(rng.uniform(1.0, 1.2))),
            ComposedReserve(Linear(p), _random_convex(rng, n)),
        )
        xs = list(rng.uniform(-20.0, 20.0, (3, n)))
        ys = list(rng.uniform(-20.0, 20.0, (3, n)))
        for reserve in reserves:
            reports = [check_cash_subadditive(reserve, x, m_grid) for x in xs]
            reports.append(check_convexity(reserve, xs, ys))
            reports.append(check_monotonicity(reserve, xs, [np.abs(y) for y in ys]))
            failures += sum(report.failed for report in reports)
    return {"instances": instances, "failures": int(failures)}


def bridge_criterion(rng: np.random.Generator, instances: int) -> dict[str, object]:
    worst, uncalibrated_detected = 0.0, 0
    for _ in range(instances):
        n = int(rng.integers(2, 5))
        rho0 = Linear(_random_probability(rng, n))
        d = DiscountFactor(rng.uniform(0.5, 1.0, n))
        b = BondQuote(float(rho0.base.weights @ d.values))
        x = rng.uniform(-20.0, 20.0, n)
        rho_t = forward_measure(rho0, d, b)
        worst = max(worst, abs(spot_from_forward(rho_t, d, b, d.values * x) - b.price * forward_from_spot(rho0, d, b, x)))
        off = BondQuote(min(1.0, b.price * 1.05))
        uncalibrated_detected += not check_forward_calibration(rho0, d, off).passed
    return {"instances": instances, "failures": int(worst > 1e-9) + instances - uncalibrated_detected, "max_gap": worst}


def bsde_oracle_criterion() -> dict[str, object]:
    errors = []
    for steps in (25, 50, 100, 200):
        lattice = build_lattice(steps, 1.0)
        root = solve_bsde(lattice, LinearRate(0.05), np.full(steps + 1, -100.0)).root
        errors.append(abs(root + 100.0 * math.exp(-0.05)))
    ratios = [later / earlier for earlier, later in zip(errors, errors[1:])]
    ok = errors[-1] <= 0.5 and all(0.4 <= ratio <= 0.6 for ratio in ratios)
    return {"errors": errors, "ratios": ratios, "failures": int(not ok)}


def bsde_structural_criterion(rng: np.random.Generator, instances: int, steps: int = 100) -> dict[str, object]:
    failures = 0
    lattice = build_lattice(steps, 1.0)
    for _ in range(instances):
        low = float(rng.uniform(0.0, 0.05))
        high = low + float(rng.uniform(0.0, 0.1))
        generator = AmbiguousRate(low, high)
        x = affine_position(lattice, float(rng.uniform(-5.0, 5.0)), float(rng.uniform(-10.0, 10.0)))
        beta = float(rng.uniform(low, high))
        reports = [
            comparison_check(generator, LinearRate(beta), -x, -x, lattice),
            dynamic_subadditivity_check(generator, x, np.linspace(-5.0, 5.0, 11), lattice),
            time_consistency_check(generator, -x, 0, steps // 2, lattice),
            dual_control_recovery(solve_bsde(lattice, generator, -x), generator).report,
        ]
        failures += sum(not report.passed for report in reports)
    return {"instances": instances, "failures": int(failures)}


def run_acceptance_sweep(
    *,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    instances: int = 20,
    criteria: dict[str, Callable[[np.random.Generator, int], dict[str, object]]] | None = None,
) -> dict[str, object]:
    criteria = criteria or {
        "envelope": envelope_criterion,
        "put_premium": put_criterion,
        "subadditivity": subadditivity_criterion,
        "bridge": bridge_criterion,
        "bsde_structure": bsde_structural_criterion,
    }
    per_seed: dict[str, dict[str, object]] = {}
    with RunLogger("acceptance_sweep", verbose=True) as run:
        for seed in seeds:
            rng = np.random.default_rng(seed)
            per_seed[str(seed)] = {name: criterion(rng, instances) for name, criterion in criteria.items()}
            run.step(f"seed {seed} done")
        oracle = bsde_oracle_criterion()
    failures = sum(int(result["failures"]) for results in per_seed.values() for result in results.values()) + int(oracle["failures"])
    logger.info("acceptance sweep over %d seeds: %d failures", len(seeds), failures)
    return {"seeds": list(seeds), "instances": instances, "per_seed": per_seed, "bsde_oracle": oracle, "failures": failures}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Run seeded randomized acceptance properties and write a JSON summary.")
    parser.add_argument("--seed", action="append", type=int, default=None, help="Repeated random seed; repeat for multiple seeds.")
    parser.add_argument("--instances", type=int, default=20, help="Random instances per criterion and seed.")
    parser.add_argument("--output-json", type=Path, default=DEFAULT_OUTPUT, help="Path to write the JSON summary.")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    setup_logging("INFO", Path(config.LOGS_DIR) / "acceptance_sweep.log")
    summary = run_acceptance_sweep(seeds=args.seed or list(DEFAULT_SEEDS), instances=args.instances)
    write_json(summary, args.output_json)
    print(json.dumps(summary, indent=2, sort_keys=True, allow_nan=False))
    return config.EXIT_CODES["ok"] if summary["failures"] == 0 else config.EXIT_CODES["check_failed"]


if __name__ == "__main__":
    raise SystemExit(main())
