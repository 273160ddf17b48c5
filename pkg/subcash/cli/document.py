"""Scenario documents: TOML files naming atoms, positions, measures and discount data.

Every validation failure is anchored to the line of the offending section or
key; see docs/scenario_format.md for the grammar.
"""

from __future__ import annotations

import logging
import math
import re
import tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

import config
from ..core.scenario import ProbabilityWeights, ScenarioSpace
from ..errors import ParseError, ResolutionError, ValidationError
from ..measures.cash_additive import Entropic, Linear, RiskMeasureSpec, RobustFamily, WorstCase
from ..measures.convex_discount import ConvexDiscountFunction, PiecewiseLinearConvex
from ..measures.spot_forward import BondQuote, DiscountFactor
from ..measures.subadditive import DiscountEnvelope

logger = logging.getLogger(__name__)

_SECTIONS = ("atoms", "positions", "measures", "envelopes", "bonds", "discounts", "convex")
_MEASURE_KINDS = ("worst_case", "linear", "entropic", "robust_family")


@dataclass(frozen=True, eq=False)
class ScenarioDocument:
    space: ScenarioSpace
    probabilities: ProbabilityWeights
    positions: dict[str, np.ndarray] = field(default_factory=dict)
    measures: dict[str, RiskMeasureSpec] = field(default_factory=dict)
    envelopes: dict[str, DiscountEnvelope] = field(default_factory=dict)
    bonds: dict[str, BondQuote] = field(default_factory=dict)
    discounts: dict[str, DiscountFactor] = field(default_factory=dict)
    convex: dict[str, ConvexDiscountFunction] = field(default_factory=dict)
    source: bytes = b""

    @property
    def size(self) -> int:
        return self.space.size

    def _resolve(self, table: dict[str, Any], kind: str, name: str | None):
        if name is None:
            raise ResolutionError(f"a {kind} name is required")
        try:
            return table[name]
        except KeyError:
            known = ", ".join(sorted(table)) or "none"
            raise ResolutionError(f"unknown {kind} {name!r} (known: {known})") from None

    def position(self, name: str | None) -> np.ndarray:
        return self._resolve(self.positions, "position", name)

    def measure(self, name: str | None) -> RiskMeasureSpec:
        return self._resolve(self.measures, "measure", name)

    def envelope(self, name: str | None) -> DiscountEnvelope:
        return self._resolve(self.envelopes, "envelope", name)

    def bond(self, name: str | None) -> BondQuote:
        return self._resolve(self.bonds, "bond", name)

    def discount(self, name: str | None) -> DiscountFactor:
        return self._resolve(self.discounts, "discount", name)

    def convex_function(self, name: str | None) -> ConvexDiscountFunction:
        return self._resolve(self.convex, "convex function", name)


class _Locator:
    """Maps (section, key) to 1-based line numbers in the raw text."""

    _HEADER = re.compile(r"^\s*\[\s*([^\]]+?)\s*\]\s*(#.*)?$")
    _KEY = re.compile(r"^\s*([A-Za-z0-9_\-\"']+)\s*=")

    def __init__(self, text: str):
        self.sections: dict[str, int] = {}
        self.keys: dict[tuple[str, str], int] = {}
        current = ""
        for number, line in enumerate(text.splitlines(), start=1):
            header = self._HEADER.match(line)
            if header:
                current = header.group(1).replace('"', "").replace("'", "")
                self.sections.setdefault(current, number)
                continue
            key = self._KEY.match(line)
            if key:
                self.keys.setdefault((current, key.group(1).strip("\"'")), number)

    def line(self, section: str, key: str | None = None) -> int | None:
        if key is not None and (section, key) in self.keys:
            return self.keys[(section, key)]
        return self.sections.get(section)


def _invalid(message: str, line: int | None) -> ValidationError:
    return ValidationError(f"line {line}: {message}" if line is not None else message)


def _vector(value: Any, n: int, what: str, line: int | None, *, broadcast: bool = False) -> np.ndarray:
    if broadcast and isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value] * n
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise _invalid(f"{what} must be a list of numbers", line)
    array = np.asarray(value, dtype=float)
    if array.size != n:
        raise _invalid(f"{what} has {array.size} entries, expected {n} (one per atom)", line)
    if not np.all(np.isfinite(array)):
        raise _invalid(f"{what} has non-finite entries", line)
    return array


def _number(value: Any, what: str, line: int | None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise _invalid(f"{what} must be a finite number", line)
    return float(value)


def _table(data: dict, section: str, locator: _Locator) -> dict:
    value = data.get(section, {})
    if not isinstance(value, dict):
        raise _invalid(f"[{section}] must be a table", locator.line(section))
    return value


def _probabilities(values: np.ndarray, what: str, line: int | None) -> ProbabilityWeights:
    if np.any(values < 0.0):
        raise _invalid(f"{what} must be nonnegative", line)
    total = math.fsum(values)
    if abs(total - 1.0) > config.TOLERANCE_CONFIG["document_probability"]:
        raise _invalid(f"{what} sum to {total!r}, expected 1", line)
    return ProbabilityWeights.normalized(values)


def _parse_measure(name: str, body: dict, n: int, p: ProbabilityWeights, locator: _Locator) -> RiskMeasureSpec:
    section = f"measures.{name}"
    kind = body.get("kind")
    if kind not in _MEASURE_KINDS:
        raise _invalid(f"measure kind must be one of {', '.join(_MEASURE_KINDS)}, got {kind!r}", locator.line(section, "kind"))

    def weights(key: str = "weights") -> ProbabilityWeights:
        if key not in body:
            return p
        line = locator.line(section, key)
        return _probabilities(_vector(body[key], n, f"{section}.{key}", line), f"{section}.{key}", line)

    match kind:
        case "worst_case":
            return WorstCase()
        case "linear":
            return Linear(weights())
        case "entropic":
            temperature = _number(body.get("temperature", 1.0), f"{section}.temperature", locator.line(section, "temperature"))
            if temperature <= 0.0:
                raise _invalid(f"{section}.temperature must be positive", locator.line(section, "temperature"))
            return Entropic(weights(), temperature)
        case "robust_family":
            line = locator.line(section, "members")
            members = body.get("members")
            if not isinstance(members, list) or not members:
                raise _invalid(f"{section}.members must be a nonempty list of weight vectors", line)
            penalties = body.get("penalties", [0.0] * len(members))
            if not isinstance(penalties, list) or len(penalties) != len(members):
                raise _invalid(f"{section}.penalties needs one entry per member", locator.line(section, "penalties"))
            rows = []
            for k, (member, penalty) in enumerate(zip(members, penalties)):
                q = _probabilities(_vector(member, n, f"{section}.members[{k}]", line), f"{section}.members[{k}]", line)
                value = _number(penalty, f"{section}.penalties[{k}]", locator.line(section, "penalties"))
                if value < 0.0:
                    raise _invalid(f"{section}.penalties must be >= 0", locator.line(section, "penalties"))
                rows.append((q, value))
            return RobustFamily(tuple(rows))
    raise AssertionError(kind)


def _parse_convex(name: str, body: dict, n: int, locator: _Locator) -> ConvexDiscountFunction:
    section = f"convex.{name}"
    if "low" in body or "high" in body:
        low = _vector(body.get("low"), n, f"{section}.low", locator.line(section, "low"), broadcast=True)
        high = _vector(body.get("high"), n, f"{section}.high", locator.line(section, "high"), broadcast=True)
        return ConvexDiscountFunction.from_bounds(low, high)
    breakpoints = body.get("breakpoints", [])
    slopes = body.get("slopes")
    line = locator.line(section, "slopes")
    if not isinstance(breakpoints, list) or not isinstance(slopes, list):
        raise _invalid(f"{section} needs lists `breakpoints` and `slopes`, or `low`/`high` bounds", locator.line(section))
    try:
        piece = PiecewiseLinearConvex(np.asarray(breakpoints, dtype=float), np.asarray(slopes, dtype=float))
    except (TypeError, ValueError) as exc:
        raise _invalid(f"{section}: {exc}", line) from exc
    return ConvexDiscountFunction.uniform(piece, n)


def parse_document(text: str, source: bytes | None = None) -> ScenarioDocument:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            found = re.search(r"line (\d+)", str(exc))
            line = int(found.group(1)) if found else None
        raise ParseError(str(getattr(exc, "msg", exc)), line) from exc

    locator = _Locator(text)
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        raise _invalid(f"unknown section [{unknown[0]}]", locator.line(unknown[0]))

    atoms = _table(data, "atoms", locator)
    if "probabilities" not in atoms:
        raise _invalid("[atoms] needs `probabilities`", locator.line("atoms"))
    probs = atoms["probabilities"]
    if not isinstance(probs, list) or not probs:
        raise _invalid("atoms.probabilities must be a nonempty list", locator.line("atoms", "probabilities"))
    n = len(probs)
    labels = atoms.get("labels", [f"w{i + 1}" for i in range(n)])
    if not isinstance(labels, list) or len(labels) != n:
        raise _invalid(f"atoms.labels needs {n} entries", locator.line("atoms", "labels"))
    try:
        space = ScenarioSpace(tuple(labels))
    except ValidationError as exc:
        raise _invalid(str(exc), locator.line("atoms", "labels")) from exc
    line = locator.line("atoms", "probabilities")
    p = _probabilities(_vector(probs, n, "atoms.probabilities", line), "atoms.probabilities", line)

    positions = {
        name: _vector(value, n, f"positions.{name}", locator.line("positions", name))
        for name, value in _table(data, "positions", locator).items()
    }

    def sections(kind: str) -> dict[str, dict]:
        bodies = _table(data, kind, locator)
        for name, body in bodies.items():
            if not isinstance(body, dict):
                raise _invalid(f"[{kind}.{name}] must be a table", locator.line(kind, name) or locator.line(f"{kind}.{name}"))
        return bodies

    measures = {name: _parse_measure(name, body, n, p, locator) for name, body in sections("measures").items()}

    envelopes = {}
    for name, body in sections("envelopes").items():
        section = f"envelopes.{name}"
        low = _vector(body.get("low"), n, f"{section}.low", locator.line(section, "low"), broadcast=True)
        high = _vector(body.get("high"), n, f"{section}.high", locator.line(section, "high"), broadcast=True)
        try:
            envelopes[name] = DiscountEnvelope(DiscountFactor(low), DiscountFactor(high))
        except ValidationError as exc:
            raise _invalid(f"{section}: {exc}", locator.line(section)) from exc

    bonds = {}
    for name, body in sections("bonds").items():
        line = locator.line(f"bonds.{name}", "price")
        try:
            bonds[name] = BondQuote(_number(body.get("price"), f"bonds.{name}.price", line))
        except ValidationError as exc:
            raise _invalid(str(exc), line) from exc

    discounts = {}
    for name, body in sections("discounts").items():
        line = locator.line(f"discounts.{name}", "values")
        try:
            discounts[name] = DiscountFactor(_vector(body.get("values"), n, f"discounts.{name}.values", line, broadcast=True))
        except ValidationError as exc:
            raise _invalid(str(exc), line) from exc

    convex = {name: _parse_convex(name, body, n, locator) for name, body in sections("convex").items()}

    logger.debug("parsed scenario: %d atoms, %d positions, %d measures", n, len(positions), len(measures))
    return ScenarioDocument(
        space,
        p,
        positions,
        measures,
        envelopes,
        bonds,
        discounts,
        convex,
        source if source is not None else text.encode("utf-8"),
    )


def ingest(path: str | Path) -> ScenarioDocument:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read scenario {path}: {exc.strerror}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"scenario {path} is not UTF-8") from exc
    return parse_document(text, raw)
