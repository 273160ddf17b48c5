"""Dispatch from parsed command-line flags to engine operations."""

from __future__ import annotations

import logging
from typing import Any, Callable, Mapping

import numpy as np

import config
from ..core.grids import GridSpec
from ..dynamic.bsde import solve_bsde, worst_discount_bound
from ..dynamic.checks import comparison_check, dual_control_recovery, dynamic_subadditivity_check, time_consistency_check
from ..dynamic.generators import AmbiguousRate, LinearRate
from ..dynamic.lattice import affine_position, build_lattice
from ..errors import ValidationError
from ..evaluation.checks import CheckReport
from ..evaluation.reports import RunReport, inputs_digest, write_node_csv
from ..measures.cash_additive import Linear, check_calibration, evaluate_rho
from ..measures.spot_forward import (
    check_forward_calibration,
    check_forward_cash_additivity,
    forward_from_spot,
    forward_measure,
    spot_from_forward,
)
from ..measures.subadditive import (
    CashAdditiveReserve,
    ComposedReserve,
    EnvelopeReserve,
    PutPremiumReserve,
    check_cash_subadditive,
    grid_discount_reserve,
    worst_case_discount,
)
from ..measures.subadditive_dual import (
    BoxSubPenalty,
    build_subpenalty_table,
    exact_subprob_penalty,
    normalized_dual,
    subprob_mesh_bound,
)
from ..transfer.inf_convolution import TransferProblem, solve_transfer
from .document import ScenarioDocument

logger = logging.getLogger(__name__)

COMMANDS = ("reserve", "dual", "bridge", "transfer", "dynamic", "check")
CHECK_SUITES = ("subadd", "calibration", "comparison", "time-consistency", "dual-control")
_UNHASHED_FLAGS = frozenset({"command", "scenario", "log_level", "report_json", "out"})

Reserve = Callable[[np.ndarray], float]


def parse_m_grid(text: str) -> np.ndarray:
    """`a:b:k` -> k evenly spaced shifts from a to b."""
    parts = text.split(":")
    try:
        low, high, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError):
        raise ValidationError(f"m-grid must look like a:b:k, got {text!r}") from None
    if len(parts) != 3 or count < 2 or not low < high:
        raise ValidationError(f"m-grid needs a < b and k >= 2, got {text!r}")
    return np.linspace(low, high, count)


def _require(doc: ScenarioDocument | None, command: str) -> ScenarioDocument:
    if doc is None:
        raise ValidationError(f"`{command}` needs --scenario")
    return doc


def build_reserve(doc: ScenarioDocument, flags: Mapping[str, Any], suffix: str = "") -> tuple[Reserve, str]:
    """The reserve a command works on, with a short label of its construction."""
    measure = doc.measure(flags.get(f"measure{suffix}"))
    envelope = flags.get(f"envelope{suffix}")
    if not suffix and flags.get("put_rate") is not None:
        probabilities = measure.base if isinstance(measure, Linear) else doc.probabilities
        return PutPremiumReserve(probabilities, float(flags["put_rate"]), float(flags.get("strike") or 0.0)), "put"
    if envelope is not None:
        return EnvelopeReserve(measure, doc.envelope(envelope)), "envelope"
    if not suffix and flags.get("convex") is not None:
        return ComposedReserve(measure, doc.convex_function(flags["convex"])), "composed"
    return CashAdditiveReserve(measure), "cash_additive"


def _resolution(flags: Mapping[str, Any]) -> int:
    return int(flags.get("resolution") or config.GRID_CONFIG["default_resolution"])


def _reserve_command(doc: ScenarioDocument, flags: Mapping[str, Any]) -> tuple[dict, dict, tuple[CheckReport, ...]]:
    x = doc.position(flags.get("position"))
    reserve, kind = build_reserve(doc, flags)
    values: dict[str, Any] = {"reserve": reserve(x)}
    metadata: dict[str, Any] = {"construction": kind}
    if isinstance(reserve, EnvelopeReserve):
        values["worst_discount"] = worst_case_discount(reserve.envelope, x)
        if flags.get("resolution") is not None:
            found = grid_discount_reserve(reserve.rho0, reserve.envelope, x, _resolution(flags))
            values["grid_reserve"] = found.value
            metadata["mesh_bound"] = found.mesh_bound
    return values, metadata, ()


def _dual_command(doc: ScenarioDocument, flags: Mapping[str, Any]) -> tuple[dict, dict, tuple[CheckReport, ...]]:
    x = doc.position(flags.get("position"))
    reserve, kind = build_reserve(doc, flags)
    primal = reserve(x)
    penalty = exact_subprob_penalty(reserve)
    metadata: dict[str, Any] = {"construction": kind}
    if isinstance(penalty, BoxSubPenalty):
        metadata.update({"penalty": "box", "mesh_bound": 0.0})
    else:
        grid = GridSpec.for_positions(x, resolution=_resolution(flags))
        penalty = build_subpenalty_table(reserve, doc.size, grid, grid)
        metadata.update({"penalty": "grid", "grid_points": len(penalty), "mesh_bound": subprob_mesh_bound(grid, x)})
    dual = normalized_dual(penalty, x)
    values = {
        "primal": primal,
        "dual": dual.value,
        "gap": abs(primal - dual.value),
        "mass": dual.mass,
        "mass_low": dual.mass_range[0],
        "mass_high": dual.mass_range[1],
        "maximizer": dual.maximizer,
    }
    if dual.measure is not None:
        values["normalized_measure"] = dual.measure.weights
    return values, metadata, ()


def _bridge_command(doc: ScenarioDocument, flags: Mapping[str, Any]) -> tuple[dict, dict, tuple[CheckReport, ...]]:
    x = doc.position(flags.get("position"))
    rho0 = doc.measure(flags.get("measure"))
    d, b = doc.discount(flags.get("discount")), doc.bond(flags.get("bond"))
    calibration = check_forward_calibration(rho0, d, b)
    shifts = parse_m_grid(flags.get("m_grid") or "-5:5:11")
    additivity = check_forward_cash_additivity(rho0, d, b, x, shifts)
    values: dict[str, Any] = {"spot": evaluate_rho(rho0, d.values * x), "forward": forward_from_spot(rho0, d, b, x)}
    metadata: dict[str, Any] = {"bond_price": b.price}
    if calibration.passed and isinstance(rho0, Linear):
        try:
            rho_t = forward_measure(rho0, d, b)
        except ValidationError as exc:
            metadata["round_trip"] = str(exc)
        else:
            values["forward_measure"] = rho_t.base.weights
            values["spot_round_trip"] = spot_from_forward(rho_t, d, b, d.values * x)
    return values, metadata, (calibration, additivity)


def _transfer_command(doc: ScenarioDocument, flags: Mapping[str, Any]) -> tuple[dict, dict, tuple[CheckReport, ...]]:
    reserve_a, kind_a = build_reserve(doc, flags, "_a")
    reserve_b, kind_b = build_reserve(doc, flags, "_b")
    problem = TransferProblem(doc.position(flags.get("exposure_a")), doc.position(flags.get("exposure_b")), reserve_a, reserve_b)
    solution = solve_transfer(problem)
    values = {"contract": solution.contract, "price": solution.price, "residual": solution.residual}
    metadata = {
        "agent_a": kind_a,
        "agent_b": kind_b,
        "standalone": solution.diagnostics["standalone"],
        "unique": solution.diagnostics["unique"],
    }
    return values, metadata, ()


def _lattice_inputs(flags: Mapping[str, Any]):
    lattice = build_lattice(int(flags.get("steps") or 100), float(flags.get("horizon") or 1.0))
    low = flags.get("rate_low")
    high = flags.get("rate_high")
    if low is None or high is None:
        raise ValidationError("dynamic runs need --rate-low and --rate-high")
    generator = AmbiguousRate(float(low), float(high))
    x = affine_position(lattice, float(flags.get("terminal_const") or 0.0), float(flags.get("terminal_slope") or 0.0))
    return lattice, generator, x


def _dynamic_command(flags: Mapping[str, Any]) -> tuple[dict, dict, tuple[CheckReport, ...], Any]:
    lattice, generator, x = _lattice_inputs(flags)
    solution = solve_bsde(lattice, generator, -x)
    bound = worst_discount_bound(lattice, generator.low, generator.high, -x)
    values: dict[str, Any] = {"Y0": solution.root, "Z0": float(solution.control(0)[0]), "worst_discount_bound": float(bound[0][0])}
    metadata: dict[str, Any] = {"steps": lattice.steps, "dt": lattice.dt, "max_fixed_point_iterations": max(solution.iterations)}
    checks: tuple[CheckReport, ...] = ()
    beta_bar = None
    if flags.get("dual"):
        control = dual_control_recovery(solution, generator)
        beta_bar = control.beta_bar
        values["Y0_recomputed"] = control.recomputed_root
        metadata["dual_max_gap"] = control.max_gap
        checks = (control.report,)
    return values, metadata, checks, solution.to_frame(beta_bar)


def _check_command(doc: ScenarioDocument | None, flags: Mapping[str, Any]) -> tuple[dict, dict, tuple[CheckReport, ...]]:
    suite = flags.get("suite")
    m_grid = parse_m_grid(flags.get("m_grid") or "-5:5:11")
    match suite:
        case "subadd" if doc is not None:
            x = doc.position(flags.get("position"))
            reserve, kind = build_reserve(doc, flags)
            report = check_cash_subadditive(reserve, x, m_grid)
            return {"reserve": reserve(x)}, {"construction": kind, "m_points": m_grid.size}, (report,)
        case "subadd":
            lattice, generator, x = _lattice_inputs(flags)
            return {}, {"steps": lattice.steps, "m_points": m_grid.size}, (dynamic_subadditivity_check(generator, x, m_grid, lattice),)
        case "calibration":
            doc = _require(doc, "check calibration")
            rho0 = doc.measure(flags.get("measure"))
            if flags.get("bond") is not None or flags.get("discount") is not None:
                report = check_forward_calibration(rho0, doc.discount(flags.get("discount")), doc.bond(flags.get("bond")))
            else:
                report = check_calibration(rho0, np.ones(doc.size))
            return {}, {}, (report,)
        case "comparison":
            lattice, generator, x = _lattice_inputs(flags)
            beta = flags.get("beta")
            beta = 0.5 * (float(generator.low[0]) + float(generator.high[0])) if beta is None else float(beta)
            return {}, {"beta": beta}, (comparison_check(generator, LinearRate(beta), -x, -x, lattice),)
        case "time-consistency":
            lattice, generator, x = _lattice_inputs(flags)
            t1 = int(flags.get("t1") or 0)
            t2 = lattice.steps // 2 if flags.get("t2") is None else int(flags["t2"])
            return {}, {"t1": t1, "t2": t2}, (time_consistency_check(generator, -x, t1, t2, lattice),)
        case "dual-control":
            lattice, generator, x = _lattice_inputs(flags)
            control = dual_control_recovery(solve_bsde(lattice, generator, -x), generator)
            return {"Y0_recomputed": control.recomputed_root}, {"max_gap": control.max_gap}, (control.report,)
    raise ValidationError(f"unknown check suite {suite!r}; expected one of {', '.join(CHECK_SUITES)}")


def run_command(doc: ScenarioDocument | None, command: str, flags: Mapping[str, Any]) -> RunReport:
    """Run one subcommand and return its report; the node CSV is written only after success."""
    hashed = {key: value for key, value in flags.items() if key not in _UNHASHED_FLAGS and value is not None}
    digest = inputs_digest(doc.source if doc is not None else None, hashed)
    frame = None
    match command:
        case "reserve":
            values, metadata, checks = _reserve_command(_require(doc, command), flags)
        case "dual":
            values, metadata, checks = _dual_command(_require(doc, command), flags)
        case "bridge":
            values, metadata, checks = _bridge_command(_require(doc, command), flags)
        case "transfer":
            values, metadata, checks = _transfer_command(_require(doc, command), flags)
        case "dynamic":
            values, metadata, checks, frame = _dynamic_command(flags)
        case "check":
            values, metadata, checks = _check_command(doc, flags)
            command = f"check {flags.get('suite')}"
        case _:
            raise ValidationError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")

    if frame is not None and flags.get("out"):
        write_node_csv(frame, flags["out"])
        metadata["csv_rows"] = len(frame)
    logger.info("%s finished with %d checks", command, len(checks))
    return RunReport(command, digest, values, metadata, checks)
