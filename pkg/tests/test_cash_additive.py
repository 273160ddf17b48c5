from __future__ import annotations

import math

import numpy as np
import pytest

from subcash.core.grids import GridSpec
from subcash.core.scenario import ProbabilityWeights
from subcash.errors import ValidationError
from subcash.evaluation.checks import check_cash_additivity, check_convexity, check_monotonicity, check_normalized
from subcash.measures.cash_additive import (
    Entropic,
    Linear,
    RobustFamily,
    WorstCase,
    as_functional,
    build_penalty_table,
    check_calibration,
    dual_evaluate,
    evaluate_rho,
    exact_penalty_table,
    grid_penalty_bound,
    minimal_penalty,
)
from subcash.measures.penalties import PenaltyTable, SubPenaltyTable, table_maximum


def _robust():
    return RobustFamily(((ProbabilityWeights([0.5, 0.5]), 0.0), (ProbabilityWeights([0.2, 0.8]), 0.1)))


def test_evaluate_rho_closed_forms(lin_half, half, x_loss_gain):
    assert evaluate_rho(WorstCase(), x_loss_gain) == 10.0
    assert evaluate_rho(lin_half, x_loss_gain) == -5.0
    assert evaluate_rho(Entropic(half, 1.0), [0.0, 0.0]) == pytest.approx(0.0, abs=1e-15)
    assert evaluate_rho(_robust(), x_loss_gain) == -5.0


def test_entropic_matches_log_sum_exp_formula(half):
    x = np.array([1.0, -1.0])
    expected = 2.0 * math.log(0.5 * math.exp(-0.5) + 0.5 * math.exp(0.5))

    assert evaluate_rho(Entropic(half, 2.0), x) == pytest.approx(expected, abs=1e-12)


def test_evaluate_rho_rejects_dimension_mismatch(lin_half):
    with pytest.raises(ValidationError, match="dimension mismatch"):
        evaluate_rho(lin_half, [1.0, 2.0, 3.0])


def test_spec_validation():
    with pytest.raises(ValidationError, match="temperature"):
        Entropic(ProbabilityWeights([0.5, 0.5]), 0.0)
    with pytest.raises(ValidationError, match="at least one member"):
        RobustFamily(())
    with pytest.raises(ValidationError, match="penalties"):
        RobustFamily(((ProbabilityWeights([0.5, 0.5]), -1.0),))


@pytest.mark.parametrize(
    "spec",
    [WorstCase(), Linear(ProbabilityWeights([0.2, 0.3, 0.5])), Entropic(ProbabilityWeights([0.2, 0.3, 0.5]), 0.7)],
    ids=["worst_case", "linear", "entropic"],
)
def test_axiom_suite_on_random_positions(spec, rng):
    functional = as_functional(spec)
    xs = list(rng.uniform(-10.0, 10.0, (25, 3)))
    ys = list(rng.uniform(-10.0, 10.0, (25, 3)))
    shifts = rng.uniform(-10.0, 10.0, 25)

    assert check_convexity(functional, xs, ys).passed
    assert check_monotonicity(functional, xs, ys).passed
    assert check_cash_additivity(functional, xs, shifts).passed
    assert check_normalized(functional, 3).passed


def test_minimal_penalty_closed_forms(lin_half, half):
    assert minimal_penalty(WorstCase(), [0.3, 0.7]) == 0.0
    assert minimal_penalty(lin_half, [0.5, 0.5]) == 0.0
    assert minimal_penalty(lin_half, [0.4, 0.6]) == math.inf

    expected = 0.9 * math.log(0.9 / 0.5) + 0.1 * math.log(0.1 / 0.5)
    assert minimal_penalty(Entropic(half, 1.0), [0.9, 0.1]) == pytest.approx(expected, abs=1e-12)


def test_entropic_penalty_dominates_grid_lower_bound(half):
    spec = Entropic(half, 1.0)
    exact = minimal_penalty(spec, [0.9, 0.1])
    bound = grid_penalty_bound(as_functional(spec), np.array([0.9, 0.1]), GridSpec(201, 20.0))

    assert bound <= exact + 1e-12
    assert bound == pytest.approx(exact, abs=1e-3)


def test_minimal_penalty_on_a_grid_is_a_lower_bound(lin_half, half):
    grid = GridSpec(21, 10.0)

    assert minimal_penalty(WorstCase(), [0.3, 0.7], grid) == pytest.approx(0.0, abs=1e-12)
    assert minimal_penalty(lin_half, [0.4, 0.6], grid) == pytest.approx(2.0, abs=1e-12)
    for spec in (Entropic(half, 1.0), _robust()):
        assert minimal_penalty(spec, [0.35, 0.65], grid) <= minimal_penalty(spec, [0.35, 0.65]) + 1e-12


def test_robust_family_penalty_uses_cheapest_mixture():
    spec = _robust()

    assert minimal_penalty(spec, [0.35, 0.65]) == pytest.approx(0.05, abs=1e-9)
    assert minimal_penalty(spec, [0.9, 0.1]) == math.inf


def test_penalties_respect_lower_bound(rng):
    q = ProbabilityWeights.normalized(rng.dirichlet(np.ones(2)))
    for spec in (WorstCase(), Entropic(ProbabilityWeights([0.5, 0.5]), 1.5), _robust()):
        assert minimal_penalty(spec, q) >= -evaluate_rho(spec, np.zeros(2)) - 1e-12


def test_dual_evaluate_with_exact_tables(lin_half, x_loss_gain, rng):
    assert dual_evaluate(exact_penalty_table(WorstCase(), 2), x_loss_gain) == 10.0
    assert dual_evaluate(exact_penalty_table(lin_half, 2), x_loss_gain) == -5.0

    spec = _robust()
    table = exact_penalty_table(spec, 2)
    for x in rng.uniform(-10.0, 10.0, (20, 2)):
        assert dual_evaluate(table, x) == pytest.approx(evaluate_rho(spec, x), abs=1e-9)

    with pytest.raises(ValidationError, match="entropic"):
        exact_penalty_table(Entropic(ProbabilityWeights([0.5, 0.5])), 2)


def test_entropic_dual_gap_shrinks_with_resolution(half):
    spec = Entropic(half, 1.0)
    x = np.array([1.0, -1.0])
    primal = evaluate_rho(spec, x)
    gaps = [primal - dual_evaluate(build_penalty_table(spec, 2, GridSpec(res)), x) for res in (3, 11, 101)]

    assert all(gap >= -1e-12 for gap in gaps)
    assert gaps[0] >= gaps[1] >= gaps[2]
    assert gaps[2] <= 0.02


def test_check_calibration_examples(rng):
    linear = Linear(ProbabilityWeights([0.3, 0.7]))
    assert check_calibration(linear, rng.normal(size=2), positions=list(rng.normal(size=(5, 2)))).passed

    report = check_calibration(WorstCase(), [1.0, -1.0], lambdas=(1.0, -1.0))
    assert report.failed
    assert report.witness["lambda"] == -1.0

    assert check_calibration(Entropic(ProbabilityWeights([0.3, 0.7]), 0.5), [3.0, 3.0]).passed


def test_penalty_tables_validate_rows_and_lookup():
    table = PenaltyTable([[0.5, 0.5], [0.2, 0.8]], [0.0, 0.1])
    assert table.lookup([0.2, 0.8]) == 0.1
    assert table.lookup([0.3, 0.7]) == math.inf
    assert list(table.to_frame(("up", "down")).columns) == ["up", "down", "penalty"]

    with pytest.raises(ValidationError, match="probability vectors"):
        PenaltyTable([[0.5, 0.4]], [0.0])
    with pytest.raises(ValidationError, match="mass at most 1"):
        SubPenaltyTable([[0.7, 0.4]], [0.0])
    with pytest.raises(ValidationError, match="empty"):
        table_maximum(PenaltyTable(np.empty((0, 2)), []), [1.0, 1.0])
