"""Tabulated penalty functions over probability and sub-probability weights."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

import config
from ..core.grids import GridSpec
from ..errors import ValidationError


@dataclass(frozen=True, eq=False)
class _WeightTable:
    measures: np.ndarray
    penalties: np.ndarray
    grid: GridSpec | None = None
    exact: bool = False

    def __post_init__(self) -> None:
        measures = np.atleast_2d(np.array(self.measures, dtype=float))
        penalties = np.array(self.penalties, dtype=float).reshape(-1)
        if measures.shape[0] != penalties.size:
            raise ValidationError(f"{measures.shape[0]} measures but {penalties.size} penalties")
        if np.any(np.isnan(penalties)) or np.any(penalties == -np.inf):
            raise ValidationError("penalties must be real or +inf")
        if np.any(measures < 0.0):
            raise ValidationError("table weights must be nonnegative")
        self._check_masses(measures.sum(axis=1))
        measures.setflags(write=False)
        penalties.setflags(write=False)
        object.__setattr__(self, "measures", measures)
        object.__setattr__(self, "penalties", penalties)

    def _check_masses(self, masses: np.ndarray) -> None:
        raise NotImplementedError

    def __len__(self) -> int:
        return int(self.penalties.size)

    @property
    def size(self) -> int:
        return int(self.measures.shape[1])

    @property
    def masses(self) -> np.ndarray:
        return self.measures.sum(axis=1)

    def lookup(self, weights) -> float:
        """Penalty of a table entry matching `weights` in max-norm, +inf if absent."""
        target = np.asarray(getattr(weights, "weights", weights), dtype=float)
        if target.shape != (self.size,):
            raise ValidationError(f"weights of shape {target.shape} do not match table atoms {self.size}")
        distance = np.max(np.abs(self.measures - target), axis=1)
        hits = distance <= config.TOLERANCE_CONFIG["probability"]
        if not np.any(hits):
            return math.inf
        return float(np.min(self.penalties[hits]))

    def __call__(self, weights) -> float:
        return self.lookup(weights)

    def finite(self) -> "_WeightTable":
        keep = np.isfinite(self.penalties)
        return type(self)(self.measures[keep], self.penalties[keep], self.grid, self.exact)

    def to_frame(self, labels: tuple[str, ...] | None = None) -> pd.DataFrame:
        columns = list(labels) if labels is not None else [f"w{i}" for i in range(self.size)]
        frame = pd.DataFrame(self.measures, columns=columns)
        frame["penalty"] = self.penalties
        return frame


class PenaltyTable(_WeightTable):
    """Penalty alpha(Q) on probability vectors."""

    def _check_masses(self, masses: np.ndarray) -> None:
        if np.any(np.abs(masses - 1.0) > config.TOLERANCE_CONFIG["probability"]):
            raise ValidationError("penalty table rows must be probability vectors")


class SubPenaltyTable(_WeightTable):
    """Penalty alpha(mu) on sub-probability vectors."""

    def _check_masses(self, masses: np.ndarray) -> None:
        if np.any(masses > 1.0 + config.TOLERANCE_CONFIG["mass"]):
            raise ValidationError("sub-penalty table rows must have mass at most 1")


def table_maximum(table: _WeightTable, x) -> tuple[float, int]:
    """max over rows of w(-x) - alpha(w) and the first maximizing row index."""
    if len(table) == 0:
        raise ValidationError("penalty table is empty")
    values = table.measures @ (-np.asarray(x, dtype=float)) - table.penalties
    index = int(np.argmax(values))
    return float(values[index]), index
