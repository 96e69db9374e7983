"""Cronie-van Lieshout bandwidth selection."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .._exceptions import DegenerateBandwidthError, InsufficientPointsError
from ..geometry import Window
from ..pattern import MarkedPointPattern
from .kernel import MassConservingKernelEstimator

logger = logging.getLogger(__name__)

CANDIDATE_COUNT = 32


def default_bandwidth_candidates(window: Window, count: int = CANDIDATE_COUNT) -> np.ndarray:
    side = window.shorter_side
    return np.geomspace(side / 100.0, side / 2.0, count)


def cvl_objective(pattern: MarkedPointPattern, bandwidth: float) -> float:
    """``|Σ 1/λ_h(x) - |W||`` with the mass-conserving estimator evaluated at the data."""
    lam = MassConservingKernelEstimator(bandwidth).evaluate(pattern, pattern.points)
    with np.errstate(divide="ignore"):
        total = float(np.sum(1.0 / lam))
    return abs(total - pattern.window.area)


@dataclass(frozen=True)
class BandwidthSelection:
    bandwidth: float
    objective: float
    candidates: np.ndarray
    objectives: np.ndarray

    def as_dict(self) -> Dict[str, Any]:
        return {
            "method": "cronie-van-lieshout",
            "bandwidth": self.bandwidth,
            "objective": self.objective,
            "candidates": self.candidates.tolist(),
            "objectives": [o if np.isfinite(o) else None for o in self.objectives.tolist()],
        }


def cvl_selection(pattern: MarkedPointPattern, candidates: Optional[Sequence[float]] = None) -> BandwidthSelection:
    if pattern.n < 2:
        raise InsufficientPointsError(
            f"bandwidth selection needs at least 2 points, pattern has {pattern.n}", {"n": pattern.n}
        )
    if candidates is None:
        candidates = default_bandwidth_candidates(pattern.window)
    candidates = np.sort(np.asarray(candidates, dtype=float).ravel())
    if len(candidates) == 0 or np.any(candidates <= 0):
        raise DegenerateBandwidthError("bandwidth candidates must be a nonempty set of positive reals")

    objectives = np.array([cvl_objective(pattern, h) for h in candidates])
    finite = np.isfinite(objectives)
    if not finite.any():
        raise DegenerateBandwidthError(
            "no bandwidth candidate gives a finite Cronie-van Lieshout objective",
            {"candidates": candidates.tolist()},
        )
    # argmin returns the first minimum, i.e. the smaller bandwidth on ties
    best = int(np.argmin(np.where(finite, objectives, np.inf)))
    logger.debug("cvl bandwidth %.4g (objective %.4g)", candidates[best], objectives[best])
    return BandwidthSelection(float(candidates[best]), float(objectives[best]), candidates, objectives)


def select_bandwidth_cvl(pattern: MarkedPointPattern, candidates: Optional[Sequence[float]] = None) -> float:
    return cvl_selection(pattern, candidates).bandwidth
