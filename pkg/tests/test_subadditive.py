from __future__ import annotations

import logging
import math

import numpy as np
import pytest

import config
from subcash.core.grids import GridSpec
from subcash.core.scenario import ProbabilityWeights
from subcash.errors import ValidationError
from subcash.evaluation.checks import check_cash_additivity, check_convexity, check_monotonicity
from subcash.measures.cash_additive import Entropic, Linear, RobustFamily, WorstCase, evaluate_rho
from subcash.measures.convex_discount import ConvexDiscountFunction, PiecewiseLinearConvex
from subcash.measures.penalties import SubPenaltyTable
from subcash.measures.subadditive import (
    CashAdditiveReserve,
    ComposedReserve,
    DiscountEnvelope,
    EnvelopeReserve,
    ExtendedPosition,
    PutPremiumReserve,
    ambiguous_discount_reserve,
    check_cash_subadditive,
    compose_representation,
    compose_with_convex,
    extend_to_hat,
    grid_discount_reserve,
    hat_functional,
    put_premium,
    restrict_to_survival,
    worst_case_discount,
)
from subcash.measures.subadditive_dual import (
    BoxSubPenalty,
    build_subpenalty_table,
    dual_evaluate_subprob,
    forward_family_curve,
    minimal_penalty_subprob,
    normalized_dual,
    worst_discounted_forward,
)

M_GRID = np.linspace(-10.0, 10.0, 21)


def test_envelope_reserve_example(lin_half, envelope_09_10, x_loss_gain):
    assert ambiguous_discount_reserve(lin_half, envelope_09_10, x_loss_gain) == pytest.approx(-4.0, abs=1e-12)
    assert worst_case_discount(envelope_09_10, x_loss_gain).tolist() == [1.0, 0.9]
    assert ambiguous_discount_reserve(lin_half, envelope_09_10, [0.0, 0.0]) == 0.0


def test_envelope_without_ambiguity_is_base_measure(rng):
    rho0 = Entropic(ProbabilityWeights([0.3, 0.7]), 2.0)
    envelope = DiscountEnvelope.constant(1.0, 1.0, 2)
    for x in rng.uniform(-10.0, 10.0, (10, 2)):
        assert ambiguous_discount_reserve(rho0, envelope, x) == pytest.approx(evaluate_rho(rho0, x), abs=1e-12)


@pytest.mark.parametrize(
    "rho0",
    [
        WorstCase(),
        Linear(ProbabilityWeights([0.2, 0.3, 0.5])),
        Entropic(ProbabilityWeights([0.2, 0.3, 0.5]), 2.0),
        RobustFamily(((ProbabilityWeights([0.2, 0.3, 0.5]), 0.0), (ProbabilityWeights([0.4, 0.4, 0.2]), 0.5))),
    ],
    ids=["worst", "linear", "entropic", "robust"],
)
def test_wider_envelope_never_lowers_reserve(rho0, rng):
    inner = DiscountEnvelope([0.9, 0.92, 0.95], [0.95, 0.97, 1.0])
    outer = DiscountEnvelope([0.8, 0.9, 0.85], [1.0, 0.97, 1.0])
    for x in rng.uniform(-20.0, 20.0, (20, 3)):
        assert ambiguous_discount_reserve(rho0, outer, x) >= ambiguous_discount_reserve(rho0, inner, x) - 1e-12


def test_grid_supremum_attains_closed_form(lin_half, envelope_09_10, x_loss_gain):
    found = grid_discount_reserve(lin_half, envelope_09_10, x_loss_gain, 21)

    assert found.value == pytest.approx(-4.0, abs=1e-12)
    assert found.maximizer.tolist() == pytest.approx([1.0, 0.9])
    assert found.mesh_bound == pytest.approx(0.1)


def test_envelope_validation():
    with pytest.raises(ValidationError, match="D_L <= D_H"):
        DiscountEnvelope.constant(1.0, 0.9, 2)
    with pytest.raises(ValidationError, match="atoms"):
        ambiguous_discount_reserve(WorstCase(), DiscountEnvelope.constant(0.9, 1.0, 3), [1.0, 2.0])


def test_put_premium_examples(half, x_loss_gain):
    assert put_premium(half, 1.05, x_loss_gain) == pytest.approx(0.5 * 10.0 / 1.05, abs=1e-12)
    assert f"{put_premium(half, 1.05, x_loss_gain):.12f}" == "4.761904761905"
    assert put_premium(half, 1.0, x_loss_gain, strike=5.0) == pytest.approx(7.5, abs=1e-12)
    assert put_premium(half, 1.05, [3.0, 0.0]) == 0.0

    with pytest.raises(ValidationError, match="gross rate"):
        put_premium(half, 0.99, x_loss_gain)


def test_put_premium_equals_envelope_form(rng):
    for _ in range(10):
        p = ProbabilityWeights.normalized(rng.dirichlet(np.ones(3)))
        reserve = PutPremiumReserve(p, float(rng.uniform(1.0, 1.2)))
        x = rng.uniform(-20.0, 20.0, 3)
        assert reserve(x) == pytest.approx(reserve.as_envelope()(x), abs=1e-12)


def test_composition_matches_envelope_and_dual_form(rng):
    rho0 = Linear(ProbabilityWeights([0.2, 0.3, 0.5]))
    envelope = DiscountEnvelope.constant(0.85, 0.95, 3)
    v = ConvexDiscountFunction((PiecewiseLinearConvex([-1.0, 2.0], [-0.8, -0.5, -0.1]),) * 3)
    for x in rng.uniform(-20.0, 20.0, (10, 3)):
        assert compose_with_convex(rho0, envelope.discount_function(), x) == pytest.approx(
            ambiguous_discount_reserve(rho0, envelope, x), abs=1e-12
        )
        assert compose_representation(rho0, v, x).value == pytest.approx(compose_with_convex(rho0, v, x), abs=1e-12)


def test_composition_of_constants_and_zero():
    piece = PiecewiseLinearConvex([-1.0, 2.0], [-0.8, -0.5, -0.1])
    v = ConvexDiscountFunction.uniform(piece, 2)
    for rho0 in (WorstCase(), Linear(ProbabilityWeights([0.4, 0.6])), Entropic(ProbabilityWeights([0.4, 0.6]))):
        assert compose_with_convex(rho0, v, [3.0, 3.0]) == pytest.approx(piece(3.0), abs=1e-12)
        assert compose_with_convex(rho0, v, [0.0, 0.0]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "reserve",
    [
        EnvelopeReserve(Linear(ProbabilityWeights([0.5, 0.5])), DiscountEnvelope.constant(0.9, 1.0, 2)),
        PutPremiumReserve(ProbabilityWeights([0.5, 0.5]), 1.05),
        ComposedReserve(Entropic(ProbabilityWeights([0.5, 0.5])), ConvexDiscountFunction.from_bounds([0.7, 0.9], [0.8, 1.0])),
        CashAdditiveReserve(Linear(ProbabilityWeights([0.5, 0.5]))),
    ],
    ids=["envelope", "put", "composed", "cash_additive"],
)
def test_shipped_reserves_pass_property_suite(reserve, rng):
    xs = list(rng.uniform(-20.0, 20.0, (10, 2)))
    ys = list(rng.uniform(-20.0, 20.0, (10, 2)))

    for x in xs:
        assert check_cash_subadditive(reserve, x, M_GRID).passed
    assert check_convexity(reserve, xs, ys).passed
    assert check_monotonicity(reserve, xs, ys).passed


def test_cash_additive_map_is_flat(lin_half, x_loss_gain):
    report = check_cash_subadditive(CashAdditiveReserve(lin_half), x_loss_gain, M_GRID)

    assert np.allclose(report.details["map"], -5.0, atol=1e-12)


def test_steep_reserve_fails_with_witness(x_loss_gain):
    steep = lambda x: float(np.mean(-2.0 * np.asarray(x)))
    report = check_cash_subadditive(steep, x_loss_gain, M_GRID)

    assert report.failed
    assert report.witness in M_GRID.tolist()


def test_check_rejects_unsorted_grid(lin_half):
    with pytest.raises(ValidationError, match="sorted"):
        check_cash_subadditive(CashAdditiveReserve(lin_half), [1.0, 2.0], [1.0, 0.0])


def test_extension_restricts_and_is_cash_additive(lin_half, envelope_09_10, x_loss_gain, rng):
    reserve = EnvelopeReserve(lin_half, envelope_09_10)

    assert extend_to_hat(reserve, ExtendedPosition(x_loss_gain, 0.0)) == pytest.approx(-4.0, abs=1e-12)
    expected = reserve(np.array([-15.0, 15.0])) - 5.0
    assert extend_to_hat(reserve, ExtendedPosition(x_loss_gain, 5.0)) == pytest.approx(expected, abs=1e-12)

    hat = hat_functional(reserve)
    for m in rng.uniform(-10.0, 10.0, 10):
        shifted = np.append(x_loss_gain + m, m)
        assert hat(shifted) == pytest.approx(hat(np.append(x_loss_gain, 0.0)) - m, abs=1e-12)

    survival = restrict_to_survival(hat)
    for x in rng.uniform(-20.0, 20.0, (5, 2)):
        assert survival(x) == pytest.approx(reserve(x), abs=1e-12)


def test_hat_extension_passes_axiom_suites(lin_half, envelope_09_10, rng):
    hat = hat_functional(EnvelopeReserve(lin_half, envelope_09_10))
    xs = list(rng.uniform(-20.0, 20.0, (10, 3)))
    ys = list(rng.uniform(-20.0, 20.0, (10, 3)))

    assert check_convexity(hat, xs, ys).passed
    assert check_monotonicity(hat, xs, ys).passed
    assert check_cash_additivity(hat, xs, M_GRID).passed


def test_hat_extension_is_monotone_in_default_leg(lin_half, envelope_09_10, rng):
    hat = hat_functional(EnvelopeReserve(lin_half, envelope_09_10))
    xs = list(rng.uniform(-20.0, 20.0, (10, 3)))
    bumps = [np.array([0.0, 0.0, d]) for d in rng.uniform(0.0, 10.0, 10)]

    assert check_monotonicity(hat, xs, bumps).passed


def test_box_penalty_membership(lin_half, envelope_09_10):
    reserve = EnvelopeReserve(lin_half, envelope_09_10)

    assert minimal_penalty_subprob(reserve, [0.45, 0.5]) == 0.0
    assert minimal_penalty_subprob(reserve, [0.5, 0.1]) == math.inf


def test_box_dual_reports_mass_and_maximizer(lin_half, envelope_09_10, x_loss_gain):
    box = BoxSubPenalty.for_envelope(EnvelopeReserve(lin_half, envelope_09_10))
    dual = normalized_dual(box, x_loss_gain)

    assert dual_evaluate_subprob(box, x_loss_gain) == pytest.approx(-4.0, abs=1e-12)
    assert dual.value == pytest.approx(-4.0, abs=1e-12)
    assert dual.maximizer.tolist() == pytest.approx([0.5, 0.45])
    assert dual.mass == pytest.approx(0.95)
    assert dual.measure.weights.tolist() == pytest.approx([0.5 / 0.95, 0.45 / 0.95])
    assert dual_evaluate_subprob(box, [0.0, 0.0]) == 0.0


def test_grid_table_dual_matches_box(lin_half, envelope_09_10, x_loss_gain):
    reserve = EnvelopeReserve(lin_half, envelope_09_10)
    table = build_subpenalty_table(reserve, 2, GridSpec(21))

    assert dual_evaluate_subprob(table, x_loss_gain) == pytest.approx(-4.0, abs=1e-9)
    assert normalized_dual(table, x_loss_gain).mass == pytest.approx(0.95)


def test_grid_penalty_table_warns_above_evaluation_threshold(monkeypatch, caplog):
    reserve = EnvelopeReserve(Entropic(ProbabilityWeights([0.5, 0.5])), DiscountEnvelope.constant(0.9, 1.0, 2))
    monkeypatch.setitem(config.GRID_CONFIG, "warn_evaluations", 10)

    with caplog.at_level(logging.WARNING, logger="subcash.measures.subadditive_dual"):
        table = build_subpenalty_table(reserve, 2, GridSpec(3), GridSpec(3, 10.0))

    assert len(table.penalties) == 6
    assert "6 weights x 3^2 positions = 54 reserve evaluations" in caplog.text


def test_grid_penalty_table_is_quiet_below_threshold(caplog):
    reserve = EnvelopeReserve(Entropic(ProbabilityWeights([0.5, 0.5])), DiscountEnvelope.constant(0.9, 1.0, 2))

    with caplog.at_level(logging.WARNING, logger="subcash.measures.subadditive_dual"):
        build_subpenalty_table(reserve, 2, GridSpec(3), GridSpec(3, 10.0))

    assert caplog.text == ""


def test_single_point_table_is_cash_additive(half, x_loss_gain):
    table = SubPenaltyTable([[0.5, 0.5]], [0.0])

    assert dual_evaluate_subprob(table, x_loss_gain) == pytest.approx(-5.0)


def test_worst_discounted_forward_over_mass_grid(lin_half, envelope_09_10, x_loss_gain):
    box = BoxSubPenalty.for_envelope(EnvelopeReserve(lin_half, envelope_09_10))
    c_grid = np.linspace(0.9, 1.0, 11)
    curve = forward_family_curve(box, x_loss_gain, c_grid)

    assert curve.index.name == "c"
    assert curve.idxmax() == pytest.approx(0.95)
    assert worst_discounted_forward(box, x_loss_gain, c_grid) == pytest.approx(-4.0, abs=1e-9)
    assert worst_discounted_forward(box, [0.0, 0.0], c_grid) == 0.0

    with pytest.raises(ValidationError, match="c-grid"):
        forward_family_curve(box, x_loss_gain, [0.0, 0.5])
