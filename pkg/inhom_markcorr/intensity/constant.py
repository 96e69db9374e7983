from typing import Callable, Optional

import numpy as np

from .._exceptions import EstimationError
from ..geometry import QuadratureGrid
from ..pattern import MarkedPointPattern
from ._base import BaseIntensityEstimator, IntensityField

IntensityFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


class ConstantIntensityEstimator(BaseIntensityEstimator):
    """``N / |W|`` everywhere; the field behind the homogeneous estimators."""

    kind = "constant"

    def evaluate(self, pattern: MarkedPointPattern, locations: np.ndarray) -> np.ndarray:
        locations = np.asarray(locations, dtype=float).reshape(-1, 2)
        return np.full(len(locations), pattern.intensity)

    def _evaluate_both(self, pattern: MarkedPointPattern, grid: QuadratureGrid):
        at_points = self.evaluate(pattern, pattern.points)
        return at_points, self.evaluate(pattern, grid.centers), float(pattern.n)


class KnownIntensity(BaseIntensityEstimator):
    """A true intensity ``func(x, y)`` supplied by the caller, e.g. a simulation preset."""

    kind = "known"
    min_points = 0

    def __init__(self, func: IntensityFunction, name: str = "known", grid: Optional[QuadratureGrid] = None):
        super().__init__(grid)
        self.func = func
        self.name = name

    def _prepare(self, pattern: MarkedPointPattern):
        return {"name": self.name}

    def evaluate(self, pattern: MarkedPointPattern, locations: np.ndarray) -> np.ndarray:
        locations = np.asarray(locations, dtype=float).reshape(-1, 2)
        values = np.broadcast_to(
            np.asarray(self.func(locations[:, 0], locations[:, 1]), dtype=float), (len(locations),)
        )
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise EstimationError(f"intensity {self.name!r} is negative or non-finite somewhere")
        return np.array(values)


def constant_intensity(pattern: MarkedPointPattern, grid: Optional[QuadratureGrid] = None) -> IntensityField:
    return ConstantIntensityEstimator().estimate(pattern, grid)
