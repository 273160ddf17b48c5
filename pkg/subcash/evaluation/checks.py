"""Check reports and the generic axiom suites for reserve functionals."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, Callable, Iterable, Sequence

import numpy as np

import config

Functional = Callable[[np.ndarray], float]


class CheckStatus(StrEnum):
    PASSED = "PASS"
    FAILED = "FAIL"
    SKIPPED = "SKIPPED"


@dataclass(frozen=True)
class CheckReport:
    name: str
    status: CheckStatus
    details: dict[str, Any] = field(default_factory=dict)
    witness: Any = None

    @classmethod
    def from_flag(cls, name: str, ok: bool, details: dict[str, Any] | None = None, witness: Any = None) -> "CheckReport":
        return cls(name, CheckStatus.PASSED if ok else CheckStatus.FAILED, details or {}, None if ok else witness)

    @classmethod
    def skipped(cls, name: str, reason: str, details: dict[str, Any] | None = None) -> "CheckReport":
        payload = dict(details or {})
        payload["reason"] = reason
        return cls(name, CheckStatus.SKIPPED, payload)

    @property
    def passed(self) -> bool:
        return self.status is CheckStatus.PASSED

    @property
    def failed(self) -> bool:
        return self.status is CheckStatus.FAILED


def combine_reports(name: str, reports: Sequence[CheckReport]) -> CheckReport:
    """Fails if any part fails; skipped if any part was skipped and none failed."""
    details = {report.name: report.status.value for report in reports}
    failures = [report for report in reports if report.failed]
    if failures:
        return CheckReport(name, CheckStatus.FAILED, details, failures[0].witness)
    if any(report.status is CheckStatus.SKIPPED for report in reports):
        return CheckReport(name, CheckStatus.SKIPPED, details)
    return CheckReport(name, CheckStatus.PASSED, details)


def _tol(tol: float | None) -> float:
    return config.TOLERANCE_CONFIG["closed_form"] if tol is None else tol


def check_convexity(
    functional: Functional,
    xs: Iterable[np.ndarray],
    ys: Iterable[np.ndarray],
    lambdas: Sequence[float] = (0.25, 0.5, 0.75),
    tol: float | None = None,
) -> CheckReport:
    tol = _tol(tol)
    worst = 0.0
    witness = None
    for x, y in zip(xs, ys):
        fx, fy = functional(x), functional(y)
        for lam in lambdas:
            excess = functional(lam * x + (1.0 - lam) * y) - (lam * fx + (1.0 - lam) * fy)
            if excess > worst:
                worst = excess
                witness = (np.asarray(x).tolist(), np.asarray(y).tolist(), lam)
    return CheckReport.from_flag("convexity", worst <= tol, {"max_excess": worst}, witness)


def check_monotonicity(
    functional: Functional,
    xs: Iterable[np.ndarray],
    increments: Iterable[np.ndarray],
    tol: float | None = None,
) -> CheckReport:
    """X <= X + d (d >= 0) must give f(X) >= f(X + d)."""
    tol = _tol(tol)
    worst = 0.0
    witness = None
    for x, d in zip(xs, increments):
        d = np.abs(np.asarray(d, dtype=float))
        excess = functional(x + d) - functional(x)
        if excess > worst:
            worst = excess
            witness = (np.asarray(x).tolist(), d.tolist())
    return CheckReport.from_flag("monotonicity", worst <= tol, {"max_increase": worst}, witness)


def check_cash_additivity(
    functional: Functional,
    xs: Iterable[np.ndarray],
    shifts: Iterable[float],
    tol: float | None = None,
) -> CheckReport:
    tol = _tol(tol)
    worst = 0.0
    witness = None
    for x, m in zip(xs, shifts):
        gap = abs(functional(x + m) - (functional(x) - m))
        if gap > worst:
            worst = gap
            witness = (np.asarray(x).tolist(), float(m))
    return CheckReport.from_flag("cash_additivity", worst <= tol, {"max_gap": worst}, witness)


def check_normalized(functional: Functional, n: int, tol: float | None = None) -> CheckReport:
    value = functional(np.zeros(n))
    return CheckReport.from_flag("normalization", abs(value) <= _tol(tol), {"value_at_zero": value}, value)
