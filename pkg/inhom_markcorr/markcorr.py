"""Homogeneous and inhomogeneous mark correlation functions.

Every estimator is a ratio of two pair sums over ordered pairs ``x != y``::

    numerator(r)   = 1/(2 pi r |W|) sum tf(m(x), m(y)) K(d(x, y) - r) e(x, y) / (lambda(x) lambda(y))
    denominator(r) = the same with tf = 1

with a one-dimensional Epanechnikov kernel ``K`` of half-width ``h_r``, or,
in the K-function form, the indicator ``d(x, y) <= r`` in place of ``K`` and
no prefactor. The homogeneous estimators are the inhomogeneous ones with the
constant field ``N / |W|``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from ._exceptions import AllMissingError, EstimationError, InsufficientPointsError
from ._types import CurveKind, CurveMetadata, EdgeCorrection, Flavor
from .geometry import ripley_factors, translation_factors
from .intensity import ConstantIntensityEstimator, IntensityField
from .pattern import MarkedPointPattern
from .testfunctions import TestFunction, UnitTestFunction, get_test_function

logger = logging.getLogger(__name__)

DEFAULT_RSTEPS = 101
PAIR_BANDWIDTH_FACTOR = 0.15
DENOMINATOR_FLOOR_FACTOR = 1e-12
EDGE_CORRECTIONS = ("translation", "ripley")

TestFunctionLike = Union[str, TestFunction]


@dataclass(frozen=True, eq=False)
class RGrid:
    """Distances at which curves are evaluated, and the pair-kernel half-width."""

    values: np.ndarray
    bandwidth: float

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if len(values) < 2:
            raise EstimationError(f"r-grid needs at least 2 values, got {len(values)}")
        if values[0] < 0 or np.any(np.diff(values) <= 0) or not np.all(np.isfinite(values)):
            raise EstimationError("r-grid must be finite, nonnegative and strictly increasing")
        if not self.bandwidth > 0:
            raise EstimationError(f"pair-kernel bandwidth must be positive, got {self.bandwidth}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def rmax(self) -> float:
        return float(self.values[-1])


def default_pair_bandwidth(pattern: MarkedPointPattern) -> float:
    """``0.15 / sqrt(N / |W|)``."""
    if pattern.n == 0:
        raise InsufficientPointsError("pair-kernel bandwidth needs at least one point")
    return PAIR_BANDWIDTH_FACTOR / math.sqrt(pattern.intensity)


def default_rgrid(
    pattern: MarkedPointPattern,
    rmax: Optional[float] = None,
    steps: int = DEFAULT_RSTEPS,
    bandwidth: Optional[float] = None,
) -> RGrid:
    """``steps`` equispaced distances from 0 to ``rmax`` (default a quarter of the shorter side)."""
    if rmax is None:
        rmax = pattern.window.shorter_side / 4.0
    if bandwidth is None:
        bandwidth = default_pair_bandwidth(pattern)
    return RGrid(np.linspace(0.0, float(rmax), int(steps)), bandwidth)


@dataclass(frozen=True, eq=False)
class SummaryCurve:
    """A function of distance on an r-grid; missing entries hold NaN."""

    rgrid: RGrid
    values: np.ndarray
    kind: CurveKind
    flavor: Flavor
    metadata: CurveMetadata = field(default_factory=dict)

    @property
    def r(self) -> np.ndarray:
        return self.rgrid.values

    @property
    def missing(self) -> np.ndarray:
        return ~np.isfinite(self.values)

    @property
    def defined(self) -> np.ndarray:
        return self.values[~self.missing]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "r": self.r,
            "value": self.values,
            "kind": self.kind,
            "flavor": self.flavor,
            "missing": self.missing,
        })


def _require_pairs(pattern: MarkedPointPattern):
    if pattern.n < 2:
        raise InsufficientPointsError(
            f"pair statistics need at least 2 points, pattern has {pattern.n}", {"n": pattern.n}
        )


class PairTable:
    """Ordered pairs of a pattern's locations, sorted by distance.

    Each pair carries ``e(x, y) / (lambda(x) lambda(y))``. The table depends on
    locations, intensity and edge correction only, so one table serves the data
    marks and every permutation of them.
    """

    def __init__(
        self,
        pattern: MarkedPointPattern,
        intensity: Optional[IntensityField] = None,
        edge: EdgeCorrection = "translation",
        cutoff: Optional[float] = None,
    ):
        _require_pairs(pattern)
        if edge not in EDGE_CORRECTIONS:
            raise EstimationError(f"unknown edge correction {edge!r}; expected one of {EDGE_CORRECTIONS}")
        if intensity is None:
            intensity = ConstantIntensityEstimator().estimate(pattern)
        lam = np.asarray(intensity.values_at_points, dtype=float)
        if len(lam) != pattern.n:
            raise EstimationError(
                f"intensity has {len(lam)} values for a pattern of {pattern.n} points",
                {"values": len(lam), "points": pattern.n},
            )
        if not np.all(lam > 0):
            raise EstimationError("intensity must be strictly positive at every data point")

        self.window = pattern.window
        self.n = pattern.n
        self.edge = edge
        self.cutoff = cutoff
        self.intensity = intensity
        self.flavor: Flavor = "homogeneous" if intensity.kind == "constant" else "inhomogeneous"

        i, j = self._pair_indices(pattern.points, cutoff)
        dx = pattern.points[i, 0] - pattern.points[j, 0]
        dy = pattern.points[i, 1] - pattern.points[j, 1]
        d = np.hypot(dx, dy)
        if edge == "translation":
            e = translation_factors(self.window, dx, dy)
        else:
            e = ripley_factors(self.window, pattern.points[i], d)
        # stable sort keeps a fixed summation order for equal distances
        order = np.argsort(d, kind="stable")
        self.i = i[order]
        self.j = j[order]
        self.distances = d[order]
        self.weights = (e / (lam[i] * lam[j]))[order]
        logger.debug("pair table: %d ordered pairs, edge=%s, flavor=%s", len(self.distances), edge, self.flavor)

    @staticmethod
    def _pair_indices(points: np.ndarray, cutoff: Optional[float]):
        n = len(points)
        if cutoff is None:
            a, b = np.triu_indices(n, k=1)
        else:
            pairs = cKDTree(points).query_pairs(float(cutoff), output_type="ndarray")
            pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))] if len(pairs) else pairs.reshape(0, 2)
            a, b = pairs[:, 0], pairs[:, 1]
        a = np.asarray(a, dtype=np.intp)
        b = np.asarray(b, dtype=np.intp)
        return np.concatenate([a, b]), np.concatenate([b, a])

    def __len__(self) -> int:
        return len(self.distances)

    @property
    def intensity_squared(self) -> float:
        return (self.n / self.window.area) ** 2

    @property
    def denominator_floor(self) -> float:
        return DENOMINATOR_FLOOR_FACTOR * self.intensity_squared

    def pair_values(self, tf: TestFunction, marks: np.ndarray) -> np.ndarray:
        """``tf(m(x), m(y)) * weight`` for every pair, in table order."""
        marks = np.asarray(marks, dtype=float)
        if isinstance(tf, UnitTestFunction):
            return self.weights
        return tf(marks[self.i], marks[self.j]) * self.weights

    def kernel_sums(self, values: np.ndarray, rgrid: RGrid) -> np.ndarray:
        """``sum values * K(d - r)`` for each ``r`` (Epanechnikov, half-width ``h_r``)."""
        h = rgrid.bandwidth
        r = rgrid.values
        if self.cutoff is not None and self.cutoff < rgrid.rmax + h:
            raise EstimationError(
                f"pair table cut off at {self.cutoff} cannot serve r up to {rgrid.rmax} with bandwidth {h}"
            )
        lo = np.searchsorted(self.distances, r - h, side="left")
        hi = np.searchsorted(self.distances, r + h, side="right")
        out = np.zeros(len(r))
        for k in range(len(r)):
            if hi[k] <= lo[k]:
                continue
            t = (self.distances[lo[k]:hi[k]] - r[k]) / h
            kern = 0.75 * (1.0 - t * t) / h
            out[k] = np.sum(values[lo[k]:hi[k]] * kern)
        return out

    def cumulative_sums(self, values: np.ndarray, rgrid: RGrid):
        """``sum values * 1{d <= r}`` for each ``r``, and the number of pairs counted."""
        if self.cutoff is not None and self.cutoff < rgrid.rmax:
            raise EstimationError(f"pair table cut off at {self.cutoff} cannot serve r up to {rgrid.rmax}")
        counts = np.searchsorted(self.distances, rgrid.values, side="right")
        totals = np.concatenate([[0.0], np.cumsum(values)])
        return totals[counts], counts

    def prefactor(self, rgrid: RGrid) -> np.ndarray:
        """``1 / (2 pi r |W|)``, NaN at ``r = 0``."""
        r = rgrid.values
        with np.errstate(divide="ignore"):
            return np.where(r > 0, 1.0 / (2.0 * math.pi * np.where(r > 0, r, 1.0) * self.window.area), np.nan)

    def metadata(self, kind: CurveKind, rgrid: RGrid, tf: Optional[TestFunction] = None, **extra: Any) -> CurveMetadata:
        meta: CurveMetadata = {
            "kind": kind,
            "flavor": self.flavor,
            "edge": self.edge,
            "test_function": tf.name if tf is not None else None,
            "pair_bandwidth": rgrid.bandwidth,
            "denominator_floor": self.denominator_floor,
            "intensity": self.intensity.provenance(),
        }
        meta.update(extra)
        return meta


def _pair_table(
    pattern: MarkedPointPattern,
    intensity: Optional[IntensityField],
    edge: EdgeCorrection,
    pairs: Optional[PairTable],
) -> PairTable:
    if pairs is not None:
        return pairs
    return PairTable(pattern, intensity, edge)


def _resolve_rgrid(pattern: MarkedPointPattern, rgrid: Optional[RGrid]) -> RGrid:
    return rgrid if rgrid is not None else default_rgrid(pattern)


def _ratio(
    pairs: PairTable,
    tf: TestFunction,
    marks: np.ndarray,
    rgrid: RGrid,
    form: str = "pcf",
) -> np.ndarray:
    """Numerator over denominator, NaN where the denominator is below its floor."""
    top = pairs.pair_values(tf, marks)
    if form == "pcf":
        num = pairs.kernel_sums(top, rgrid)
        den = pairs.kernel_sums(pairs.weights, rgrid)
        valid = (rgrid.values > 0) & (den * pairs.prefactor(rgrid) >= pairs.denominator_floor)
    elif form == "K":
        num, _ = pairs.cumulative_sums(top, rgrid)
        den, counts = pairs.cumulative_sums(pairs.weights, rgrid)
        valid = (counts > 0) & (den > 0)
    else:
        raise EstimationError(f"unknown curve form {form!r}; expected 'pcf' or 'K'")
    out = np.full(len(rgrid), np.nan)
    out[valid] = num[valid] / den[valid]
    return out


def _check_defined(values: np.ndarray, what: str) -> np.ndarray:
    if not np.any(np.isfinite(values)):
        raise AllMissingError(f"{what} is missing at every r: no pairs support the grid")
    return values


def mark_correlation(
    pairs: PairTable,
    tf: TestFunctionLike,
    marks: np.ndarray,
    rgrid: RGrid,
    normalizer: Optional[float] = None,
    form: str = "pcf",
) -> np.ndarray:
    """Raw curve values for one set of marks on a prepared pair table.

    ``normalizer=None`` gives the unnormalised ``c`` curve.
    """
    tf = get_test_function(tf)
    values = _check_defined(_ratio(pairs, tf, marks, rgrid, form), f"{tf.name} correlation")
    if normalizer is not None:
        values = values / normalizer
    return values


def pairsum_numerator(
    pattern: MarkedPointPattern,
    tf: TestFunctionLike,
    intensity: Optional[IntensityField] = None,
    rgrid: Optional[RGrid] = None,
    edge: EdgeCorrection = "translation",
    pairs: Optional[PairTable] = None,
) -> SummaryCurve:
    tf = get_test_function(tf)
    rgrid = _resolve_rgrid(pattern, rgrid)
    pairs = _pair_table(pattern, intensity, edge, pairs)
    values = pairs.prefactor(rgrid) * pairs.kernel_sums(pairs.pair_values(tf, pattern.marks), rgrid)
    return SummaryCurve(rgrid, values, "numerator", pairs.flavor, pairs.metadata("numerator", rgrid, tf))


def pairsum_denominator(
    pattern: MarkedPointPattern,
    intensity: Optional[IntensityField] = None,
    rgrid: Optional[RGrid] = None,
    edge: EdgeCorrection = "translation",
    pairs: Optional[PairTable] = None,
) -> SummaryCurve:
    rgrid = _resolve_rgrid(pattern, rgrid)
    pairs = _pair_table(pattern, intensity, edge, pairs)
    values = pairs.prefactor(rgrid) * pairs.kernel_sums(pairs.weights, rgrid)
    return SummaryCurve(rgrid, values, "denominator", pairs.flavor, pairs.metadata("denominator", rgrid))


def pcf_inhom(
    pattern: MarkedPointPattern,
    intensity: Optional[IntensityField] = None,
    rgrid: Optional[RGrid] = None,
    edge: EdgeCorrection = "translation",
    pairs: Optional[PairTable] = None,
) -> SummaryCurve:
    """Pair correlation function of the ground process."""
    curve = pairsum_denominator(pattern, intensity, rgrid, edge, pairs)
    meta = dict(curve.metadata, kind="pcf")
    return SummaryCurve(curve.rgrid, curve.values, "pcf", curve.flavor, meta)


def c_inhom(
    pattern: MarkedPointPattern,
    tf: TestFunctionLike,
    intensity: Optional[IntensityField] = None,
    rgrid: Optional[RGrid] = None,
    edge: EdgeCorrection = "translation",
    pairs: Optional[PairTable] = None,
) -> SummaryCurve:
    """Unnormalised mark correlation ``c_tf(r)``."""
    tf = get_test_function(tf)
    rgrid = _resolve_rgrid(pattern, rgrid)
    pairs = _pair_table(pattern, intensity, edge, pairs)
    values = mark_correlation(pairs, tf, pattern.marks, rgrid)
    return SummaryCurve(rgrid, values, "c_unnorm", pairs.flavor, pairs.metadata("c_unnorm", rgrid, tf))


def kappa_inhom(
    pattern: MarkedPointPattern,
    tf: TestFunctionLike,
    intensity: Optional[IntensityField] = None,
    rgrid: Optional[RGrid] = None,
    edge: EdgeCorrection = "translation",
    pairs: Optional[PairTable] = None,
    normalizer: Optional[float] = None,
) -> SummaryCurve:
    """Normalised mark correlation; ``gamma`` for the variogram test function.

    ``normalizer`` overrides the empirical constant of the test function.
    """
    tf = get_test_function(tf)
    if normalizer is None:
        normalizer = tf.normalizer(pattern)
    rgrid = _resolve_rgrid(pattern, rgrid)
    pairs = _pair_table(pattern, intensity, edge, pairs)
    values = mark_correlation(pairs, tf, pattern.marks, rgrid, normalizer)
    kind = tf.curve_kind
    return SummaryCurve(rgrid, values, kind, pairs.flavor, pairs.metadata(kind, rgrid, tf, normalizer=normalizer))


def k_ratio_inhom(
    pattern: MarkedPointPattern,
    tf: TestFunctionLike,
    intensity: Optional[IntensityField] = None,
    rgrid: Optional[RGrid] = None,
    edge: EdgeCorrection = "translation",
    pairs: Optional[PairTable] = None,
    normalizer: Optional[float] = None,
) -> SummaryCurve:
    """Ratio of mark-weighted to plain K-functions; normalised when ``normalizer`` is given."""
    tf = get_test_function(tf)
    rgrid = _resolve_rgrid(pattern, rgrid)
    pairs = _pair_table(pattern, intensity, edge, pairs)
    values = mark_correlation(pairs, tf, pattern.marks, rgrid, normalizer, form="K")
    meta = pairs.metadata("K_ratio", rgrid, tf, normalizer=normalizer)
    return SummaryCurve(rgrid, values, "K_ratio", pairs.flavor, meta)


def c_homogeneous(
    pattern: MarkedPointPattern,
    tf: TestFunctionLike,
    rgrid: Optional[RGrid] = None,
    edge: EdgeCorrection = "translation",
) -> SummaryCurve:
    return c_inhom(pattern, tf, ConstantIntensityEstimator().estimate(pattern), rgrid, edge)


def kappa_homogeneous(
    pattern: MarkedPointPattern,
    tf: TestFunctionLike,
    rgrid: Optional[RGrid] = None,
    edge: EdgeCorrection = "translation",
    normalizer: Optional[float] = None,
) -> SummaryCurve:
    return kappa_inhom(
        pattern, tf, ConstantIntensityEstimator().estimate(pattern), rgrid, edge, normalizer=normalizer
    )


def estimate_curves(
    pattern: MarkedPointPattern,
    tf: TestFunctionLike,
    intensity: Optional[IntensityField],
    rgrid: Optional[RGrid] = None,
    edge: EdgeCorrection = "translation",
) -> Dict[str, SummaryCurve]:
    """``c``, normalised, K-ratio and pcf curves on one shared pair table."""
    tf = get_test_function(tf)
    rgrid = _resolve_rgrid(pattern, rgrid)
    pairs = PairTable(pattern, intensity, edge)
    normalizer = tf.normalizer(pattern)
    return {
        "c_unnorm": c_inhom(pattern, tf, rgrid=rgrid, pairs=pairs),
        tf.curve_kind: kappa_inhom(pattern, tf, rgrid=rgrid, pairs=pairs, normalizer=normalizer),
        "K_ratio": k_ratio_inhom(pattern, tf, rgrid=rgrid, pairs=pairs, normalizer=normalizer),
        "pcf": pcf_inhom(pattern, rgrid=rgrid, pairs=pairs),
    }
