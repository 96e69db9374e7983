"""Rectangular windows, distances, edge corrections and quadrature grids."""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.spatial import distance as _distance

from ._exceptions import UndefinedOverlapError, WindowError

logger = logging.getLogger(__name__)

RIPLEY_MIN_FRACTION = 1e-6

PointLike = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle ``[xmin, xmax] x [ymin, ymax]``."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        values = (self.xmin, self.xmax, self.ymin, self.ymax)
        if not all(math.isfinite(v) for v in values):
            raise WindowError(f"window bounds must be finite, got {values}")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise WindowError(
                f"window needs xmax > xmin and ymax > ymin, got {values}",
                {"bounds": list(values)},
            )

    @classmethod
    def unit(cls) -> "Window":
        return cls(0.0, 1.0, 0.0, 1.0)

    @classmethod
    def parse(cls, text: str) -> "Window":
        """Parse ``"xmin,xmax,ymin,ymax"``."""
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 4:
            raise WindowError(f"window needs four comma-separated reals, got {text!r}")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError as exc:
            raise WindowError(f"window bounds must be numbers, got {text!r}") from exc

    @classmethod
    def bounding(cls, points: np.ndarray) -> "Window":
        """Bounding box of ``points``; zero extents are widened to unit length."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(points) == 0:
            return cls.unit()
        lo, hi = points.min(axis=0), points.max(axis=0)
        for axis in range(2):
            if hi[axis] <= lo[axis]:
                lo[axis], hi[axis] = lo[axis] - 0.5, hi[axis] + 0.5
        return cls(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def shorter_side(self) -> float:
        return min(self.width, self.height)

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.xmin, self.xmax, self.ymin, self.ymax)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points inside the closed rectangle."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        x, y = points[:, 0], points[:, 1]
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)


@dataclass(frozen=True)
class QuadratureGrid:
    """Regular ``nx`` by ``ny`` partition of a window into equal cells.

    Cell values are stored flat in row-major order: index ``iy * nx + ix``.
    """

    window: Window
    nx: int = 128
    ny: int = 128

    def __post_init__(self):
        if int(self.nx) < 1 or int(self.ny) < 1:
            raise WindowError(f"grid needs positive cell counts, got {self.nx}x{self.ny}")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def dx(self) -> float:
        return self.window.width / self.nx

    @property
    def dy(self) -> float:
        return self.window.height / self.ny

    @property
    def cell_area(self) -> float:
        return self.window.area / self.size

    @cached_property
    def cell_areas(self) -> np.ndarray:
        return np.full(self.size, self.cell_area)

    @cached_property
    def x_centers(self) -> np.ndarray:
        return self.window.xmin + (np.arange(self.nx) + 0.5) * self.dx

    @cached_property
    def y_centers(self) -> np.ndarray:
        return self.window.ymin + (np.arange(self.ny) + 0.5) * self.dy

    @cached_property
    def centers(self) -> np.ndarray:
        xx, yy = np.meshgrid(self.x_centers, self.y_centers)
        return np.column_stack([xx.ravel(), yy.ravel()])

    def cell_index(self, points: np.ndarray) -> np.ndarray:
        """Flat index of the cell containing each point (boundary points clipped in)."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        ix = np.floor((points[:, 0] - self.window.xmin) / self.dx).astype(int)
        iy = np.floor((points[:, 1] - self.window.ymin) / self.dy).astype(int)
        ix = np.clip(ix, 0, self.nx - 1)
        iy = np.clip(iy, 0, self.ny - 1)
        return iy * self.nx + ix

    def integrate(self, values: np.ndarray) -> float:
        values = np.asarray(values, dtype=float).ravel()
        return float(np.sum(values) * self.cell_area)


def distance(p: PointLike, q: PointLike) -> float:
    return math.hypot(float(p[0]) - float(q[0]), float(p[1]) - float(q[1]))


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(points) < 2:
        return np.zeros((len(points), len(points)))
    return _distance.squareform(_distance.pdist(points))


def _overlap_area(window: Window, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return (window.width - np.abs(dx)) * (window.height - np.abs(dy))


def translation_correction(window: Window, p: PointLike, q: PointLike) -> float:
    """``|W| / |W ∩ W_{p-q}|`` for a rectangle."""
    dx = float(p[0]) - float(q[0])
    dy = float(p[1]) - float(q[1])
    if abs(dx) >= window.width or abs(dy) >= window.height:
        raise UndefinedOverlapError(
            f"shift ({dx}, {dy}) leaves no overlap with the window",
            {"shift": [dx, dy]},
        )
    return window.area / float(_overlap_area(window, np.asarray(dx), np.asarray(dy)))


def translation_weights(window: Window, points: np.ndarray) -> np.ndarray:
    """Translation correction for every ordered pair of ``points``.

    Pairs without overlap (points on opposite edges) get weight 0.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    dx = points[:, 0][:, None] - points[:, 0][None, :]
    dy = points[:, 1][:, None] - points[:, 1][None, :]
    return translation_factors(window, dx, dy)


def translation_factors(window: Window, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Elementwise translation correction for shift components ``dx``, ``dy``."""
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    overlap = _overlap_area(window, dx, dy)
    valid = (np.abs(dx) < window.width) & (np.abs(dy) < window.height)
    n_invalid = int(np.count_nonzero(~valid))
    if n_invalid:
        logger.warning("%d ordered pairs have no translated overlap; weighted 0", n_invalid)
    weights = np.zeros_like(overlap)
    weights[valid] = window.area / overlap[valid]
    return weights


def _circle_inside_fraction(window: Window, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    # Breakpoints are the angles where the circle crosses the four edge lines;
    # each arc between consecutive breakpoints is wholly in or out.
    cx, cy = centers[:, 0], centers[:, 1]
    r = radii
    gaps = [
        (cx - window.xmin, math.pi),
        (window.xmax - cx, 0.0),
        (cy - window.ymin, -0.5 * math.pi),
        (window.ymax - cy, 0.5 * math.pi),
    ]
    angles = [np.zeros_like(r)]
    with np.errstate(invalid="ignore", divide="ignore"):
        for gap, normal in gaps:
            crossing = r > gap
            half = np.where(crossing, np.arccos(np.clip(gap / np.where(r > 0, r, 1.0), -1.0, 1.0)), 0.0)
            angles.append(np.where(crossing, normal - half, 0.0))
            angles.append(np.where(crossing, normal + half, 0.0))
    theta = np.sort(np.mod(np.column_stack(angles), 2.0 * math.pi), axis=1)
    theta = np.column_stack([theta, theta[:, :1] + 2.0 * math.pi])
    lengths = np.diff(theta, axis=1)
    mids = theta[:, :-1] + 0.5 * lengths
    mx = cx[:, None] + r[:, None] * np.cos(mids)
    my = cy[:, None] + r[:, None] * np.sin(mids)
    tol = 1e-12 * max(window.width, window.height)
    inside = (
        (mx >= window.xmin - tol) & (mx <= window.xmax + tol)
        & (my >= window.ymin - tol) & (my <= window.ymax + tol)
    )
    return np.sum(np.where(inside, lengths, 0.0), axis=1) / (2.0 * math.pi)


def ripley_correction(window: Window, p: PointLike, r: float) -> float:
    """Reciprocal of the fraction of the circle ``B(p, r)`` boundary inside the window."""
    centers = np.asarray(p, dtype=float).reshape(1, 2)
    fraction = _circle_inside_fraction(window, centers, np.asarray([float(r)]))[0]
    return 1.0 / max(fraction, RIPLEY_MIN_FRACTION)


def ripley_weights(window: Window, points: np.ndarray, distances: np.ndarray) -> np.ndarray:
    """Ripley correction ``e(x_i, x_j)`` for the circle about ``x_i`` through ``x_j``."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(points)
    centers = np.repeat(points, n, axis=0)
    return ripley_factors(window, centers, np.asarray(distances, dtype=float).ravel()).reshape(n, n)


def ripley_factors(window: Window, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Elementwise Ripley correction for circles ``B(centers[k], radii[k])``."""
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    radii = np.asarray(radii, dtype=float).ravel()
    if len(radii) == 0:
        return np.zeros(0)
    fractions = _circle_inside_fraction(window, centers, radii)
    return 1.0 / np.maximum(fractions, RIPLEY_MIN_FRACTION)
