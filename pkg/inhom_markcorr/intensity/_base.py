import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from .._exceptions import InsufficientPointsError
from .._types import IntensityProvenance
from ..geometry import QuadratureGrid
from ..pattern import MarkedPointPattern

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class IntensityField:
    """Intensity evaluated at the data points and on a quadrature grid.

    Stored values are clamped at ``clamp_floor``; ``mass`` is the integral of
    the unclamped estimate over the window.
    """

    kind: str
    values_at_points: np.ndarray
    grid: QuadratureGrid
    grid_values: np.ndarray
    clamp_floor: float
    clamp_count: int = 0
    mass: float = float("nan")
    bandwidth: Optional[float] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def surface(self) -> np.ndarray:
        return self.grid_values.reshape(self.grid.shape)

    def provenance(self) -> IntensityProvenance:
        info: IntensityProvenance = {
            "kind": self.kind,
            "bandwidth": self.bandwidth,
            "clamp_floor": self.clamp_floor,
            "clamp_count": self.clamp_count,
            "mass": self.mass,
        }
        for key in ("retention", "replicates", "seed"):
            if key in self.extras:
                info[key] = self.extras[key]
        return info

    def to_frame(self) -> pd.DataFrame:
        centers = self.grid.centers
        return pd.DataFrame({"cell_x": centers[:, 0], "cell_y": centers[:, 1], "value": self.grid_values})


def clamp_floor(pattern: MarkedPointPattern, factor: float) -> float:
    return factor * max(pattern.n, 1) / pattern.window.area


def _clamp(values: np.ndarray, floor: float) -> Tuple[np.ndarray, int]:
    values = np.asarray(values, dtype=float)
    low = ~(values >= floor)
    clamped = np.where(low, floor, values)
    clamped.flags.writeable = False
    return clamped, int(np.count_nonzero(low))


class BaseIntensityEstimator(ABC):
    clamp_factor: float = 1e-8
    min_points: int = 1

    def __init__(self, grid: Optional[QuadratureGrid] = None):
        self.grid = grid

    @property
    @abstractmethod
    def kind(self) -> str:
        pass

    @abstractmethod
    def evaluate(self, pattern: MarkedPointPattern, locations: np.ndarray) -> np.ndarray:
        """Unclamped intensity at ``locations``."""
        pass

    @property
    def bandwidth_value(self) -> Optional[float]:
        return None

    def _prepare(self, pattern: MarkedPointPattern) -> Dict[str, Any]:
        return {}

    def _evaluate_both(
        self, pattern: MarkedPointPattern, grid: QuadratureGrid
    ) -> Tuple[np.ndarray, np.ndarray, float]:
        """Values at the data points, on the grid, and the integral over W."""
        on_grid = self.evaluate(pattern, grid.centers)
        return self.evaluate(pattern, pattern.points), on_grid, grid.integrate(on_grid)

    def estimate(self, pattern: MarkedPointPattern, grid: Optional[QuadratureGrid] = None) -> IntensityField:
        if pattern.n < self.min_points:
            raise InsufficientPointsError(
                f"{self.kind} intensity needs at least {self.min_points} points, pattern has {pattern.n}",
                {"n": pattern.n},
            )
        grid = grid or self.grid or QuadratureGrid(pattern.window)
        extras = self._prepare(pattern)
        at_points, on_grid, mass = self._evaluate_both(pattern, grid)
        floor = clamp_floor(pattern, self.clamp_factor)
        points_clamped, n_points = _clamp(at_points, floor)
        grid_clamped, n_grid = _clamp(on_grid, floor)
        if n_points:
            logger.info("%s intensity clamped at %d data points (floor %.3g)", self.kind, n_points, floor)
        return IntensityField(
            kind=self.kind,
            values_at_points=points_clamped,
            grid=grid,
            grid_values=grid_clamped,
            clamp_floor=floor,
            clamp_count=n_points + n_grid,
            mass=mass,
            bandwidth=self.bandwidth_value,
            extras=extras,
        )
