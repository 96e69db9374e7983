"""Nadaraya-Watson smoothing of marks: spatially varying mean and variance."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from .._exceptions import EstimationError
from .._types import Statistic
from ..geometry import QuadratureGrid
from ..pattern import MarkedPointPattern, _require_points
from .kernel import BLOCK_ROWS

logger = logging.getLogger(__name__)

STATISTICS = ("mean", "variance")


def nadaraya_watson(
    points: np.ndarray,
    marks: np.ndarray,
    locations: np.ndarray,
    bandwidth: float,
    statistic: Statistic = "mean",
) -> np.ndarray:
    """Kernel-weighted mark mean or variance at each location.

    Locations whose Gaussian weights all underflow are returned as NaN.
    """
    if statistic not in STATISTICS:
        raise EstimationError(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")
    if not bandwidth > 0:
        raise EstimationError(f"bandwidth must be positive, got {bandwidth}")
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    marks = np.asarray(marks, dtype=float).ravel()
    locations = np.asarray(locations, dtype=float).reshape(-1, 2)
    out = np.full(len(locations), np.nan)
    if len(points) == 0:
        return out
    lo, hi = float(marks.min()), float(marks.max())
    for start in range(0, len(locations), BLOCK_ROWS):
        block = locations[start:start + BLOCK_ROWS]
        # the kernel's normalising constant cancels in the ratio
        weights = np.exp(-0.5 * cdist(block, points, "sqeuclidean") / (bandwidth * bandwidth))
        total = weights.sum(axis=1)
        ok = total > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.clip((weights @ marks) / total, lo, hi)
            if statistic == "mean":
                value = mean
            else:
                resid = marks[None, :] - mean[:, None]
                value = np.maximum(np.sum(weights * resid * resid, axis=1) / total, 0.0)
        out[start:start + BLOCK_ROWS] = np.where(ok, value, np.nan)
    return out


@dataclass(frozen=True, eq=False)
class MarkSurface:
    grid: QuadratureGrid
    values: np.ndarray
    statistic: Statistic
    bandwidth: float
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def surface(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def to_frame(self) -> pd.DataFrame:
        centers = self.grid.centers
        return pd.DataFrame({
            "cell_x": centers[:, 0],
            "cell_y": centers[:, 1],
            "value": self.values,
            "missing": self.missing,
        })


def nadaraya_watson_mark_surface(
    pattern: MarkedPointPattern,
    bandwidth: float,
    grid: Optional[QuadratureGrid] = None,
    statistic: Statistic = "mean",
) -> MarkSurface:
    _require_points(pattern, 2, "mark smoothing")
    grid = grid or QuadratureGrid(pattern.window)
    values = nadaraya_watson(pattern.points, pattern.marks, grid.centers, bandwidth, statistic)
    n_missing = int(np.count_nonzero(np.isnan(values)))
    if n_missing:
        logger.warning("%d of %d cells have no kernel weight at bandwidth %.4g", n_missing, grid.size, bandwidth)
    return MarkSurface(grid, values, statistic, float(bandwidth))
