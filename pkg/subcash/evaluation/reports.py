"""Run report rendering and deterministic JSON / CSV writing."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import pandas as pd

from ..utils.helpers import save_frame
from .checks import CheckReport


def _sanitize_for_json(value):
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(key): _sanitize_for_json(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_sanitize_for_json(item) for item in value]
    if isinstance(value, tuple):
        return [_sanitize_for_json(item) for item in value]
    return value


def format_number(value: float) -> str:
    """Twelve decimals, `inf` / `-inf` tokens, ASCII minus, no negative zero."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    text = f"{value:.12f}"
    return text[1:] if text.startswith("-") and float(text) == 0.0 else text


def _format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_number(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_format_value(item) for item in value) + "]"
    return str(value)


def inputs_digest(scenario_bytes: bytes | None, flags: Mapping[str, Any]) -> str:
    """sha256 over the scenario bytes and the sorted flags."""
    digest = hashlib.sha256()
    digest.update(scenario_bytes or b"")
    for key in sorted(flags):
        digest.update(f"\n{key}={flags[key]!r}".encode("utf-8"))
    return digest.hexdigest()


@dataclass(frozen=True)
class RunReport:
    command: str
    digest: str
    values: dict[str, Any] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)
    checks: tuple[CheckReport, ...] = ()

    @property
    def all_passed(self) -> bool:
        return not any(check.failed for check in self.checks)

    def render(self) -> str:
        lines = [f"command = {self.command}", f"digest = {self.digest}"]
        lines += [f"value.{key} = {_format_value(value)}" for key, value in self.values.items()]
        lines += [f"meta.{key} = {_format_value(value)}" for key, value in self.metadata.items()]
        for check in self.checks:
            lines.append(f"check.{check.name} = {check.status.value}")
            if check.witness is not None:
                lines.append(f"check.{check.name}.witness = {_format_value(check.witness)}")
            if "reason" in check.details:
                lines.append(f"check.{check.name}.reason = {check.details['reason']}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "digest": self.digest,
            "values": dict(self.values),
            "metadata": dict(self.metadata),
            "checks": [
                {"name": check.name, "status": check.status.value, "details": check.details, "witness": check.witness}
                for check in self.checks
            ],
        }


def write_json(payload: dict, report_path: str | Path) -> Path:
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    with report_path.open("w", encoding="utf-8") as handle:
        handle.write(json.dumps(_sanitize_for_json(payload), indent=2, sort_keys=True, allow_nan=False))
        handle.write("\n")
    return report_path


def write_run_report(report: RunReport, output_dir: str | Path) -> Path:
    """Write the report to `<command>.json` in the output directory."""
    return write_json(report.to_dict(), Path(output_dir) / f"{report.command.split()[0]}.json")


def write_node_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    """Header row, ',' separator, '.' decimal, LF endings, empty cells for undefined values."""
    return save_frame(frame, path)
