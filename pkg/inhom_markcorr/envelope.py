"""Global rank envelope test ordered by extreme rank length, for random labelling."""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ._exceptions import AllMissingError, EstimationError
from ._random import Key
from ._types import DeviationRange, EdgeCorrection, EnvelopeVerdict, Flavor
from ._workers import parallel_map
from .intensity import BaseIntensityEstimator, ConstantIntensityEstimator, MassConservingKernelEstimator
from .markcorr import PairTable, RGrid, SummaryCurve, default_rgrid, mark_correlation
from .pattern import MarkedPointPattern, permute_marks
from .testfunctions import TestFunction, get_test_function

logger = logging.getLogger(__name__)

DEFAULT_PERMUTATIONS = 999
DEFAULT_ALPHA = 0.05


@dataclass(frozen=True, eq=False)
class CurveEnsemble:
    """Data curve ``T0`` (row 0) followed by ``s`` simulated curves on one r-grid."""

    r: np.ndarray
    curves: np.ndarray

    def __post_init__(self):
        curves = np.asarray(self.curves, dtype=float)
        r = np.asarray(self.r, dtype=float).ravel()
        if curves.ndim != 2 or curves.shape[1] != len(r):
            raise EstimationError(f"curves of shape {curves.shape} do not match an r-grid of length {len(r)}")
        if curves.shape[0] < 2:
            raise EstimationError("an envelope test needs the data curve and at least one simulation")
        object.__setattr__(self, "curves", curves)
        object.__setattr__(self, "r", r)

    @classmethod
    def from_curves(cls, data: SummaryCurve, simulations: Sequence[SummaryCurve]) -> "CurveEnsemble":
        rows = [data.values] + [c.values for c in simulations]
        return cls(data.r, np.vstack(rows))

    @property
    def s(self) -> int:
        return self.curves.shape[0] - 1

    @property
    def data(self) -> np.ndarray:
        return self.curves[0]

    @property
    def simulations(self) -> np.ndarray:
        return self.curves[1:]

    @property
    def missing(self) -> np.ndarray:
        """Grid entries missing in any curve; excluded from ranking for all."""
        return ~np.all(np.isfinite(self.curves), axis=0)


@dataclass(frozen=True)
class RankTable:
    low: np.ndarray
    high: np.ndarray
    columns: np.ndarray

    @property
    def ranks(self) -> np.ndarray:
        """Two-sided pointwise ranks; smaller is more extreme."""
        return np.minimum(self.low, self.high)


def pointwise_ranks(ensemble: CurveEnsemble) -> RankTable:
    """Strict-inequality counts below and above each curve at each valid grid point."""
    columns = np.flatnonzero(~ensemble.missing)
    values = ensemble.curves[:, columns]
    n_curves = values.shape[0]
    low = np.empty(values.shape, dtype=np.int64)
    high = np.empty(values.shape, dtype=np.int64)
    for k in range(values.shape[1]):
        ordered = np.sort(values[:, k])
        low[:, k] = np.searchsorted(ordered, values[:, k], side="left")
        high[:, k] = n_curves - np.searchsorted(ordered, values[:, k], side="right")
    return RankTable(low, high, columns)


@dataclass(frozen=True)
class ErlOrder:
    """ERL vectors and their lexicographic levels; level 0 is the most extreme."""

    vectors: np.ndarray
    levels: np.ndarray

    def more_extreme(self, a: int, b: int) -> bool:
        return bool(self.levels[a] < self.levels[b])


def erl_order(ranks: RankTable) -> ErlOrder:
    if ranks.columns.size == 0:
        raise AllMissingError("every grid point is missing in some curve; nothing to rank")
    vectors = np.sort(ranks.ranks, axis=1)
    # unique rows come back in lexicographic order, so the inverse is the level
    _, inverse = np.unique(vectors, axis=0, return_inverse=True)
    return ErlOrder(vectors, np.asarray(inverse).ravel())


@dataclass(frozen=True, eq=False)
class EnvelopeResult:
    r: np.ndarray
    data: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    central: np.ndarray
    missing: np.ndarray
    data_level: int
    p_lower: float
    p_upper: float
    alpha: float
    s: int
    seed: Optional[int] = None
    statistic: Dict[str, Any] = field(default_factory=dict)

    @property
    def reject(self) -> bool:
        return self.p_upper < self.alpha

    @property
    def boundary(self) -> bool:
        """The p-interval straddles ``alpha``: the verdict hinges on residual ties."""
        return self.p_lower < self.alpha <= self.p_upper

    @property
    def p_interval(self):
        return (self.p_lower, self.p_upper)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "r": self.r,
            "data": self.data,
            "lo": self.lower,
            "hi": self.upper,
            "central": self.central,
            "missing": self.missing,
        })

    def verdict(self) -> EnvelopeVerdict:
        return {
            "p_lower": self.p_lower,
            "p_upper": self.p_upper,
            "alpha": self.alpha,
            "s": self.s,
            "seed": self.seed,
            "reject": self.reject,
            "boundary": self.boundary,
            "deviations": deviation_ranges(self),
            "statistic": self.statistic,
        }


def rank_envelope_test(
    ensemble: CurveEnsemble,
    alpha: float = DEFAULT_ALPHA,
    seed: Optional[int] = None,
    statistic: Optional[Dict[str, Any]] = None,
) -> EnvelopeResult:
    if not 0.0 < alpha < 1.0:
        raise EstimationError(f"alpha must lie in (0, 1), got {alpha}")
    s = ensemble.s
    total = s + 1
    if alpha * total < 1:
        warnings.warn(
            f"{s} simulations are too few for alpha={alpha}; at least {math.ceil(1 / alpha) - 1} are needed "
            "for the test to be able to reject",
            stacklevel=2,
        )

    order = erl_order(pointwise_ranks(ensemble))
    levels = order.levels
    data_level = int(levels[0])
    p_upper = int(np.count_nonzero(levels <= data_level)) / total
    p_lower = int(np.count_nonzero(levels < data_level)) / total

    # keep the least extreme curves; ties at the cutoff level are all kept
    keep = total - math.floor(alpha * total)
    cutoff = np.sort(levels)[::-1][keep - 1]
    kept = ensemble.curves[levels >= cutoff]
    missing = ensemble.missing
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lower = np.where(missing, np.nan, np.min(kept, axis=0))
        upper = np.where(missing, np.nan, np.max(kept, axis=0))
        # median of the simulations, held inside the envelope
        central = np.where(missing, np.nan, np.clip(np.median(ensemble.simulations, axis=0), lower, upper))

    logger.info("erl test: s=%d p in [%.4g, %.4g] alpha=%g", s, p_lower, p_upper, alpha)
    return EnvelopeResult(
        r=ensemble.r,
        data=ensemble.data.copy(),
        lower=lower,
        upper=upper,
        central=central,
        missing=missing,
        data_level=data_level,
        p_lower=p_lower,
        p_upper=p_upper,
        alpha=float(alpha),
        s=s,
        seed=seed,
        statistic=dict(statistic or {}),
    )


def deviation_ranges(result: EnvelopeResult) -> List[DeviationRange]:
    """Maximal runs of valid grid points where the data curve leaves the envelope."""
    ranges: List[DeviationRange] = []
    current = None
    for k in range(len(result.r)):
        direction = None
        if not result.missing[k]:
            if result.data[k] > result.upper[k]:
                direction = "above"
            elif result.data[k] < result.lower[k]:
                direction = "below"
        if current is not None and direction == current["direction"]:
            current["r_end"] = float(result.r[k])
            continue
        if current is not None:
            ranges.append(current)
            current = None
        if direction is not None:
            current = {"direction": direction, "r_start": float(result.r[k]), "r_end": float(result.r[k])}
    if current is not None:
        ranges.append(current)
    return ranges


@dataclass(frozen=True)
class PreparedRecipe:
    pairs: PairTable
    rgrid: RGrid
    normalizer: Optional[float]


@dataclass
class CurveRecipe:
    """How to turn a marked pattern into the test statistic curve.

    The intensity and pair table are computed once per pattern; only the marks
    change between the data curve and its permutations.
    """

    tf: Any = "mm"
    flavor: Flavor = "inhomogeneous"
    form: str = "pcf"
    edge: EdgeCorrection = "translation"
    rmax: Optional[float] = None
    rsteps: int = 101
    pair_bandwidth: Optional[float] = None
    estimator: Optional[BaseIntensityEstimator] = None
    normalize: bool = True

    def __post_init__(self):
        self.tf = get_test_function(self.tf)
        if self.flavor not in ("homogeneous", "inhomogeneous"):
            raise EstimationError(f"unknown flavor {self.flavor!r}")
        if self.form not in ("pcf", "K"):
            raise EstimationError(f"unknown curve form {self.form!r}; expected 'pcf' or 'K'")

    @property
    def test_function(self) -> TestFunction:
        return self.tf

    def intensity_estimator(self) -> BaseIntensityEstimator:
        if self.flavor == "homogeneous":
            return ConstantIntensityEstimator()
        return self.estimator or MassConservingKernelEstimator()

    def describe(self) -> Dict[str, Any]:
        return {
            "test_function": self.tf.name,
            "flavor": self.flavor,
            "form": self.form,
            "edge": self.edge,
            "normalized": self.normalize,
        }

    def prepare(self, pattern: MarkedPointPattern) -> PreparedRecipe:
        rgrid = default_rgrid(pattern, self.rmax, self.rsteps, self.pair_bandwidth)
        intensity = self.intensity_estimator().estimate(pattern)
        pairs = PairTable(pattern, intensity, self.edge)
        normalizer = self.tf.normalizer(pattern) if self.normalize else None
        return PreparedRecipe(pairs, rgrid, normalizer)

    def evaluate(self, prepared: PreparedRecipe, marks: np.ndarray) -> np.ndarray:
        return mark_correlation(prepared.pairs, self.tf, marks, prepared.rgrid, prepared.normalizer, self.form)


def run_random_labelling_test(
    pattern: MarkedPointPattern,
    recipe: Optional[CurveRecipe] = None,
    s: int = DEFAULT_PERMUTATIONS,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    workers: Optional[int] = None,
    keys: Tuple[Key, ...] = (),
) -> EnvelopeResult:
    """Envelope test of ``recipe``'s curve against ``s`` mark permutations of ``pattern``.

    Permutation ``i`` uses the stream ``(seed, *keys, "envelope", i)``; callers
    testing many patterns under one seed pass a per-pattern ``keys``.
    """
    if s < 1:
        raise EstimationError(f"need at least one permutation, got s={s}")
    recipe = recipe or CurveRecipe()
    prepared = recipe.prepare(pattern)
    data = recipe.evaluate(prepared, pattern.marks)

    def permuted(index: int) -> np.ndarray:
        return recipe.evaluate(prepared, permute_marks(pattern, seed, *keys, "envelope", index).marks)

    simulations = parallel_map(permuted, range(1, s + 1), workers)
    ensemble = CurveEnsemble(prepared.rgrid.values, np.vstack([data] + simulations))
    statistic = recipe.describe()
    statistic["intensity"] = prepared.pairs.intensity.provenance()
    statistic["normalizer"] = prepared.normalizer
    statistic["pair_bandwidth"] = prepared.rgrid.bandwidth
    if keys:
        statistic["stream"] = list(keys)
    return rank_envelope_test(ensemble, alpha, seed=seed, statistic=statistic)
