"""Piecewise-linear convex discount functions V and their Fenchel transforms.

A piece with breakpoints x_0 < ... < x_{K-1} carries K+1 slopes s_0 <= ... <= s_K
in [-1, 0]; s_0 applies left of x_0 and s_K right of x_{K-1}. V is stored as a
max of affine functions shifted so that V(0) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from ..core.scenario import as_position
from ..errors import ValidationError

_DOMAIN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PiecewiseLinearConvex:
    breakpoints: np.ndarray
    slopes: np.ndarray

    def __post_init__(self) -> None:
        breakpoints = np.array(self.breakpoints, dtype=float).reshape(-1)
        slopes = np.array(self.slopes, dtype=float).reshape(-1)
        if slopes.size != breakpoints.size + 1:
            raise ValidationError(f"{breakpoints.size} breakpoints need {breakpoints.size + 1} slopes, got {slopes.size}")
        if not (np.all(np.isfinite(breakpoints)) and np.all(np.isfinite(slopes))):
            raise ValidationError("breakpoints and slopes must be finite")
        if np.any(np.diff(breakpoints) <= 0.0):
            raise ValidationError(f"breakpoints must be strictly increasing: {breakpoints.tolist()}")
        if np.any(np.diff(slopes) < 0.0):
            raise ValidationError(f"slopes must be nondecreasing (convexity): {slopes.tolist()}")
        if np.any(slopes < -1.0) or np.any(slopes > 0.0):
            raise ValidationError(f"slopes must lie in [-1, 0]: {slopes.tolist()}")
        intercepts = np.zeros(slopes.size)
        for k, x_k in enumerate(breakpoints):
            intercepts[k + 1] = intercepts[k] + (slopes[k] - slopes[k + 1]) * x_k
        intercepts -= np.max(intercepts)
        for array in (breakpoints, slopes, intercepts):
            array.setflags(write=False)
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "_intercepts", intercepts)

    @classmethod
    def linear(cls, slope: float) -> "PiecewiseLinearConvex":
        return cls(np.empty(0), np.array([slope]))

    @classmethod
    def envelope(cls, d_low: float, d_high: float) -> "PiecewiseLinearConvex":
        """v(x) = -(d_L x+ - d_H x-): slope -d_H left of 0, -d_L right of 0."""
        if d_low == d_high:
            return cls.linear(-d_low)
        return cls(np.array([0.0]), np.array([-d_high, -d_low]))

    def __call__(self, x) -> np.ndarray | float:
        values = np.asarray(x, dtype=float)
        result = np.max(self._intercepts + self.slopes * values[..., None], axis=-1)
        return float(result) if result.ndim == 0 else result

    def conjugate(self, y) -> np.ndarray | float:
        """beta(y) = sup_x {x y - V(x)}: max over breakpoints on [s_0, s_K], +inf outside."""
        values = np.asarray(y, dtype=float)
        inside = (values >= self.slopes[0] - _DOMAIN_TOL) & (values <= self.slopes[-1] + _DOMAIN_TOL)
        if self.breakpoints.size == 0:
            finite = np.zeros_like(values)
        else:
            at_breaks = self(self.breakpoints)
            finite = np.max(self.breakpoints * values[..., None] - at_breaks, axis=-1)
        result = np.where(inside, finite, math.inf)
        return float(result) if result.ndim == 0 else result

    def biconjugate(self, x) -> np.ndarray | float:
        """sup_y {x y - beta(y)}, attained at the slopes."""
        values = np.asarray(x, dtype=float)
        beta_at_slopes = np.asarray(self.conjugate(self.slopes), dtype=float).reshape(-1)
        result = np.max(self.slopes * values[..., None] - beta_at_slopes, axis=-1)
        return float(result) if result.ndim == 0 else result

    def minimizing_discounts(self) -> np.ndarray:
        """Discount levels -s_k where D x + beta(-D) can attain its minimum."""
        return np.unique(-self.slopes)


@dataclass(frozen=True, eq=False)
class ConvexDiscountFunction:
    """Per-atom V(omega, .)."""

    pieces: tuple[PiecewiseLinearConvex, ...]

    def __post_init__(self) -> None:
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValidationError("a discount function needs at least one atom")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def uniform(cls, piece: PiecewiseLinearConvex, n: int) -> "ConvexDiscountFunction":
        return cls((piece,) * n)

    @classmethod
    def from_bounds(cls, low: Sequence[float], high: Sequence[float]) -> "ConvexDiscountFunction":
        return cls(tuple(PiecewiseLinearConvex.envelope(lo, hi) for lo, hi in zip(low, high)))

    @property
    def size(self) -> int:
        return len(self.pieces)

    def __call__(self, x) -> np.ndarray:
        x = as_position(x, self.size)
        return np.array([piece(value) for piece, value in zip(self.pieces, x)])

    def conjugate(self, atom: int, y) -> np.ndarray | float:
        return self.pieces[atom].conjugate(y)


def fenchel_of_V(v: ConvexDiscountFunction, atom: int, y_grid=None) -> pd.Series:
    """Conjugate table beta_T(omega, y) on a y-grid (default 101 points on [-1, 0])."""
    if not 0 <= atom < v.size:
        raise ValidationError(f"atom index {atom} out of range for {v.size} atoms")
    ys = np.linspace(-1.0, 0.0, 101) if y_grid is None else np.asarray(y_grid, dtype=float)
    values = np.asarray(v.conjugate(atom, ys), dtype=float)
    return pd.Series(values, index=pd.Index(ys, name="y"), name="beta")
