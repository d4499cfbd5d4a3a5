"""Least-squares container shared by the scaling fits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats


@dataclass
class ScalingFit:
    exponent: float
    stderr: float
    points: list[tuple[float, float]]
    window: tuple[int, int]
    slope: float = float("nan")
    intercept: float = float("nan")
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "stderr": self.stderr,
            "slope": self.slope,
            "intercept": self.intercept,
            "window": list(self.window),
            "points": [list(p) for p in self.points],
            "notes": list(self.notes),
        }


def linear_fit(xs, ys) -> tuple[float, float, float]:
    """Unweighted least squares; returns (slope, intercept, slope stderr)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise ValueError("a scaling fit needs at least 3 points")
    res = stats.linregress(xs, ys)
    return float(res.slope), float(res.intercept), float(res.stderr)
