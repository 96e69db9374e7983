"""Voronoi intensity estimation with resample smoothing by independent thinnings."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial import ConvexHull, Delaunay, HalfspaceIntersection, QhullError, cKDTree

from .._exceptions import EstimationError
from .._random import derive_rng
from .._workers import parallel_map
from ..geometry import QuadratureGrid, Window
from ..pattern import MarkedPointPattern
from ._base import BaseIntensityEstimator, IntensityField

logger = logging.getLogger(__name__)


def _window_halfspaces(window: Window) -> np.ndarray:
    # rows [a, b, c] encode a·x + b·y + c <= 0
    return np.array([
        [-1.0, 0.0, window.xmin],
        [1.0, 0.0, -window.xmax],
        [0.0, -1.0, window.ymin],
        [0.0, 1.0, -window.ymax],
    ])


def _neighbours(sites: np.ndarray) -> List[np.ndarray]:
    n = len(sites)
    everyone = [np.delete(np.arange(n), i) for i in range(n)]
    if n < 4:
        return everyone
    try:
        indptr, indices = Delaunay(sites).vertex_neighbor_vertices
    except QhullError:
        # collinear sites: clip against every other site
        return everyone
    return [indices[indptr[i]:indptr[i + 1]] for i in range(n)]


def _interior_point(site: np.ndarray, others: np.ndarray, window: Window) -> np.ndarray:
    """A point strictly inside the clipped cell of ``site``.

    Sites on the window boundary are moved towards the window centre by less
    than a quarter of the nearest neighbour distance.
    """
    center = np.array([(window.xmin + window.xmax) / 2, (window.ymin + window.ymax) / 2])
    offset = center - site
    length = float(np.hypot(*offset))
    if length == 0.0:
        return site
    step = 0.25 * min(window.width, window.height)
    if len(others):
        step = min(step, 0.25 * float(np.min(np.hypot(*(others - site).T))))
    return site + offset * (min(step, length) / length)


def _clipped_cell(site: np.ndarray, others: np.ndarray, window: Window) -> Tuple[np.ndarray, float]:
    normals = others - site
    bisectors = np.column_stack([normals, -np.einsum("ij,ij->i", normals, 0.5 * (others + site))])
    halfspaces = np.vstack([_window_halfspaces(window), bisectors])
    cell = HalfspaceIntersection(halfspaces, _interior_point(site, others, window))
    hull = ConvexHull(cell.intersections)
    # for 2-d hulls ``volume`` is the enclosed area
    return cell.intersections[hull.vertices], float(hull.volume)


@dataclass(frozen=True)
class VoronoiCells:
    """Voronoi cells of the distinct sites, clipped to the window.

    ``inverse`` maps each input point to its site; coincident points share
    a cell and ``counts`` holds the multiplicity.
    """

    sites: np.ndarray
    areas: np.ndarray
    counts: np.ndarray
    inverse: np.ndarray
    polygons: Tuple[np.ndarray, ...]


def voronoi_cells(points: np.ndarray, window: Window) -> VoronoiCells:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    sites, inverse, counts = np.unique(points, axis=0, return_inverse=True, return_counts=True)
    inverse = np.asarray(inverse).ravel()
    polygons = []
    areas = []
    for i, neighbours in enumerate(_neighbours(sites)):
        polygon, area = _clipped_cell(sites[i], sites[neighbours], window)
        polygons.append(polygon)
        areas.append(area)
    return VoronoiCells(sites, np.asarray(areas), counts, inverse, tuple(polygons))


class VoronoiIntensityEstimator(BaseIntensityEstimator):
    """Average of ``m`` rescaled Voronoi estimates of independent ``p``-thinnings.

    ``retention=1, replicates=1`` is the plain Voronoi estimator.
    """

    kind = "voronoi"

    def __init__(
        self,
        retention: float = 1.0,
        replicates: int = 1,
        seed: int = 0,
        grid: Optional[QuadratureGrid] = None,
    ):
        super().__init__(grid)
        if not 0.0 < retention <= 1.0:
            raise EstimationError(f"retention must lie in (0, 1], got {retention}")
        if replicates < 1:
            raise EstimationError(f"replicates must be at least 1, got {replicates}")
        self.retention = float(retention)
        self.replicates = int(replicates)
        self.seed = int(seed)

    def _prepare(self, pattern: MarkedPointPattern):
        return {"retention": self.retention, "replicates": self.replicates, "seed": self.seed}

    def _thinning(self, pattern: MarkedPointPattern, index: int) -> np.ndarray:
        rng = derive_rng(self.seed, "voronoi", index)
        return rng.random(pattern.n) < self.retention

    def _replicate(self, pattern: MarkedPointPattern, index: int, locations: np.ndarray):
        keep = self._thinning(pattern, index)
        n_kept = int(np.count_nonzero(keep))
        if n_kept == 0:
            return np.zeros(len(locations)), 0.0
        cells = voronoi_cells(pattern.points[keep], pattern.window)
        _, nearest = cKDTree(cells.sites).query(locations)
        density = np.where(cells.areas > 0, cells.counts / np.where(cells.areas > 0, cells.areas, 1.0), 0.0)
        return density[nearest], float(density @ cells.areas)

    def _run(self, pattern: MarkedPointPattern, locations: np.ndarray):
        results = parallel_map(lambda i: self._replicate(pattern, i, locations), range(self.replicates))
        total = np.zeros(len(locations))
        mass = 0.0
        for values, integral in results:
            total += values
            mass += integral
        scale = 1.0 / (self.replicates * self.retention)
        return total * scale, mass * scale

    def evaluate(self, pattern: MarkedPointPattern, locations: np.ndarray) -> np.ndarray:
        values, _ = self._run(pattern, np.asarray(locations, dtype=float).reshape(-1, 2))
        return values

    def _evaluate_both(self, pattern: MarkedPointPattern, grid: QuadratureGrid):
        locations = np.vstack([pattern.points, grid.centers])
        values, mass = self._run(pattern, locations)
        return values[:pattern.n], values[pattern.n:], mass


def voronoi_intensity(
    pattern: MarkedPointPattern,
    retention: float = 1.0,
    replicates: int = 1,
    seed: int = 0,
    grid: Optional[QuadratureGrid] = None,
) -> IntensityField:
    return VoronoiIntensityEstimator(retention, replicates, seed).estimate(pattern, grid)
