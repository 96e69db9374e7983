"""Scenario simulators: inhomogeneous Poisson and log-Gaussian Cox ground
processes with deterministic or noisy mark rules."""

import dataclasses
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.spatial.distance import pdist, squareform

from ._exceptions import (
    NonPositiveDefiniteError,
    SimulationError,
    UnboundedIntensityError,
    UnknownPresetError,
)
from ._random import Key, derive_rng
from ._types import MarkRule
from .geometry import QuadratureGrid, Window
from .pattern import MarkedPointPattern

logger = logging.getLogger(__name__)

BOUND_GRID = 256
BOUND_SAFETY = 1.1
FIELD_GRID = 64
MAX_DENSE_CELLS = FIELD_GRID * FIELD_GRID
JITTER_STEPS = (0.0, 1e-12, 1e-10, 1e-8, 1e-6)
MARK_RULES = ("sin-association", "noisy-amplitude", "iid-uniform")


class Expression(ABC):
    """A surface ``f(x, y)`` on the window: an intensity or a log-intensity mean."""

    name: str = "expression"

    @abstractmethod
    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        pass

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name}


class NamedExpression(Expression):
    """One of the closed set of scenario surfaces."""

    FUNCTIONS: Dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
        "assoc-intensity": lambda x, y: 50.0 * np.exp(np.sin(4 * x**2 + 4 * y**2)),
        "assoc-lgcp-mean": lambda x, y: math.log(90.0) + np.sin(4 * x**2 + 4 * y**2) - 1.0,
        "assoc-lgcp-intensity": lambda x, y: 90.0 * np.exp(np.sin(4 * x**2 + 4 * y**2) - 0.25),
        "vario-intensity": lambda x, y: 40.0 * (x + y + 0.5) ** 4,
        "vario-lgcp-mean": lambda x, y: np.log(200.0 * (x + y + 0.1)),
        "vario-lgcp-intensity": lambda x, y: 200.0 * (x + y + 0.1) * math.exp(0.5),
    }

    def __init__(self, name: str):
        if name not in self.FUNCTIONS:
            raise SimulationError(f"unknown expression {name!r}; known: {sorted(self.FUNCTIONS)}")
        self.name = name

    def __call__(self, x, y):
        return np.asarray(self.FUNCTIONS[self.name](np.asarray(x, dtype=float), np.asarray(y, dtype=float)))


class ConstantExpression(Expression):
    def __init__(self, value: float):
        self.value = float(value)
        self.name = f"constant({self.value:g})"

    def __call__(self, x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, self.value)

    def describe(self):
        return {"name": "constant", "value": self.value}


class RasterExpression(Expression):
    """Piecewise-constant surface given by per-cell values on a grid."""

    def __init__(self, grid: QuadratureGrid, values: np.ndarray, name: str = "raster"):
        values = np.asarray(values, dtype=float).ravel()
        if len(values) != grid.size:
            raise SimulationError(f"raster has {len(values)} values for a grid of {grid.size} cells")
        self.grid = grid
        self.values = values
        self.name = name

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        points = np.column_stack([np.broadcast_to(x, shape).ravel(), np.broadcast_to(y, shape).ravel()])
        return self.values[self.grid.cell_index(points)].reshape(shape)

    def describe(self):
        return {"name": self.name, "grid": [self.grid.nx, self.grid.ny]}

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, window: Window, name: str = "raster") -> "RasterExpression":
        """Raster from a ``cell_x, cell_y, value`` table as written by the intensity command."""
        nx = frame["cell_x"].nunique()
        ny = frame["cell_y"].nunique()
        grid = QuadratureGrid(window, nx, ny)
        ordered = frame.sort_values(["cell_y", "cell_x"])
        return cls(grid, ordered["value"].to_numpy(dtype=float), name)


def expression_bound(expression: Expression, window: Window, resolution: int = BOUND_GRID) -> float:
    """Grid maximum of ``expression`` over the window times the safety factor."""
    xs = np.linspace(window.xmin, window.xmax, resolution)
    ys = np.linspace(window.ymin, window.ymax, resolution)
    xx, yy = np.meshgrid(xs, ys)
    with np.errstate(all="ignore"):
        values = expression(xx, yy)
    if not np.all(np.isfinite(values)):
        raise UnboundedIntensityError(f"intensity {expression.name!r} is not finite on the window")
    if np.any(values < 0):
        raise SimulationError(f"intensity {expression.name!r} is negative somewhere on the window")
    return BOUND_SAFETY * float(values.max())


def expected_count(expression: Expression, window: Window, resolution: int = BOUND_GRID) -> float:
    """Midpoint-rule integral of ``expression`` over the window."""
    grid = QuadratureGrid(window, resolution, resolution)
    return grid.integrate(expression(grid.centers[:, 0], grid.centers[:, 1]))


def _unmarked(window: Window, points: np.ndarray) -> MarkedPointPattern:
    return MarkedPointPattern(window, points, np.zeros(len(points)))


def _poisson(expression: Expression, window: Window, rng: np.random.Generator) -> MarkedPointPattern:
    bound = expression_bound(expression, window)
    if bound == 0.0:
        return _unmarked(window, np.zeros((0, 2)))
    n = rng.poisson(bound * window.area)
    x = rng.uniform(window.xmin, window.xmax, n)
    y = rng.uniform(window.ymin, window.ymax, n)
    values = np.asarray(expression(x, y), dtype=float)
    if n and values.max() > bound:
        logger.warning("intensity %s exceeds its grid bound at %d proposals", expression.name,
                       int(np.count_nonzero(values > bound)))
    keep = rng.random(n) * bound < values
    return _unmarked(window, np.column_stack([x[keep], y[keep]]))


def simulate_inhomogeneous_poisson(
    intensity: Expression, window: Optional[Window] = None, seed: int = 0, *keys
) -> MarkedPointPattern:
    """Thinning of a homogeneous Poisson process at the bounded rate; marks are zero."""
    window = window or Window.unit()
    return _poisson(intensity, window, derive_rng(seed, "poisson", *keys))


@dataclass(frozen=True)
class CovarianceSpec:
    """Stationary isotropic covariance.

    ``exponential``: ``variance * exp(-d / scale)``;
    ``gaussian``: ``variance * exp(-(d / scale)^2)``.
    """

    kind: str = "exponential"
    variance: float = 1.0
    scale: float = 0.1

    def __post_init__(self):
        if self.kind not in ("exponential", "gaussian"):
            raise SimulationError(f"unknown covariance kind {self.kind!r}")
        if not self.variance >= 0:
            raise SimulationError(f"covariance variance must be nonnegative, got {self.variance}")
        if not self.scale > 0:
            raise SimulationError(f"covariance scale must be positive, got {self.scale}")

    def __call__(self, d: np.ndarray) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        if self.kind == "exponential":
            return self.variance * np.exp(-d / self.scale)
        return self.variance * np.exp(-((d / self.scale) ** 2))


@dataclass(frozen=True)
class GaussianFieldSpec:
    mean: Expression
    covariance: CovarianceSpec

    def describe(self) -> Dict[str, Any]:
        return {"mean": self.mean.describe(), "covariance": dataclasses.asdict(self.covariance)}


@dataclass(frozen=True, eq=False)
class GaussianFieldSample:
    grid: QuadratureGrid
    values: np.ndarray
    spec: GaussianFieldSpec
    seed: int

    @property
    def surface(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def to_frame(self) -> pd.DataFrame:
        centers = self.grid.centers
        return pd.DataFrame({"cell_x": centers[:, 0], "cell_y": centers[:, 1], "value": self.values})


@lru_cache(maxsize=1)
def _covariance_factor(covariance: CovarianceSpec, bounds: Tuple[float, ...], nx: int, ny: int) -> np.ndarray:
    grid = QuadratureGrid(Window(*bounds), nx, ny)
    matrix = covariance(squareform(pdist(grid.centers)))
    diagonal = np.arange(grid.size)
    for step in JITTER_STEPS:
        jittered = matrix.copy()
        jittered[diagonal, diagonal] += step * covariance.variance
        try:
            factor = linalg.cholesky(jittered, lower=True)
        except linalg.LinAlgError:
            logger.debug("cholesky failed with jitter %.0e", step)
            continue
        if step:
            logger.info("covariance factorised with diagonal jitter %.0e * variance", step)
        factor.flags.writeable = False
        return factor
    raise NonPositiveDefiniteError(
        f"{covariance.kind} covariance on a {nx}x{ny} grid is not positive definite "
        f"even with jitter {JITTER_STEPS[-1]:.0e} * variance",
        {"covariance": dataclasses.asdict(covariance), "grid": [nx, ny]},
    )


def _gaussian_field(spec: GaussianFieldSpec, grid: QuadratureGrid, rng: np.random.Generator) -> np.ndarray:
    centers = grid.centers
    mean = np.broadcast_to(np.asarray(spec.mean(centers[:, 0], centers[:, 1]), dtype=float), (grid.size,))
    if spec.covariance.variance == 0.0:
        return np.array(mean)
    if grid.size > MAX_DENSE_CELLS:
        raise SimulationError(
            f"dense factorisation is limited to {MAX_DENSE_CELLS} cells, grid has {grid.size}",
            {"grid": [grid.nx, grid.ny]},
        )
    factor = _covariance_factor(spec.covariance, grid.window.as_tuple(), grid.nx, grid.ny)
    return mean + factor @ rng.standard_normal(grid.size)


def simulate_gaussian_field(
    spec: GaussianFieldSpec, grid: Optional[QuadratureGrid] = None, seed: int = 0, *keys
) -> GaussianFieldSample:
    grid = grid or QuadratureGrid(Window.unit(), FIELD_GRID, FIELD_GRID)
    values = _gaussian_field(spec, grid, derive_rng(seed, "field", *keys))
    return GaussianFieldSample(grid, values, spec, seed)


def _cox(log_intensity: np.ndarray, grid: QuadratureGrid, rng: np.random.Generator) -> MarkedPointPattern:
    rate = np.exp(log_intensity) * grid.cell_area
    counts = rng.poisson(rate)
    cells = np.repeat(np.arange(grid.size), counts)
    ix = cells % grid.nx
    iy = cells // grid.nx
    window = grid.window
    x = window.xmin + (ix + rng.random(len(cells))) * grid.dx
    y = window.ymin + (iy + rng.random(len(cells))) * grid.dy
    # keep points inside the closed window despite rounding at the far edges
    x = np.minimum(x, window.xmax)
    y = np.minimum(y, window.ymax)
    return _unmarked(window, np.column_stack([x, y]))


def simulate_lgcp(
    spec: GaussianFieldSpec,
    window: Optional[Window] = None,
    seed: int = 0,
    *keys,
    grid: Optional[QuadratureGrid] = None,
) -> MarkedPointPattern:
    """Cox process driven by ``exp`` of a Gaussian field, piecewise constant on ``grid``."""
    window = window or Window.unit()
    grid = grid or QuadratureGrid(window, FIELD_GRID, FIELD_GRID)
    field = _gaussian_field(spec, grid, derive_rng(seed, "field", *keys))
    return _cox(field, grid, derive_rng(seed, "cox", *keys))


def _marks(points: np.ndarray, rule: MarkRule, rng: np.random.Generator) -> np.ndarray:
    x, y = points[:, 0], points[:, 1]
    if rule == "sin-association":
        return np.sin(x**2 + y**2)
    if rule == "noisy-amplitude":
        amplitude = rng.uniform(0.0, 0.5, len(points))
        return amplitude * np.sin(np.sqrt(x**2 + y**2))
    if rule == "iid-uniform":
        return rng.uniform(0.0, 1.0, len(points))
    raise SimulationError(f"unknown mark rule {rule!r}; expected one of {MARK_RULES}")


def assign_marks(pattern: MarkedPointPattern, rule: MarkRule, seed: int = 0, *keys) -> MarkedPointPattern:
    return pattern.with_marks(_marks(pattern.points, rule, derive_rng(seed, "marks", *keys)))


@dataclass(frozen=True)
class ScenarioSpec:
    """Ground process plus mark rule.

    ``ground`` is ``"poisson"`` (uses ``intensity``) or ``"lgcp"`` (uses
    ``field``); ``stated_intensity`` is the analytic first-order intensity.
    """

    name: str
    ground: str
    mark_rule: MarkRule
    window: Window = dataclasses.field(default_factory=Window.unit)
    intensity: Optional[Expression] = None
    field: Optional[GaussianFieldSpec] = None
    stated_intensity: Optional[Expression] = None
    test_function: str = "mm"
    field_grid: Tuple[int, int] = (FIELD_GRID, FIELD_GRID)

    def __post_init__(self):
        if self.ground == "poisson" and self.intensity is None:
            raise SimulationError("a poisson scenario needs an intensity expression")
        if self.ground == "lgcp" and self.field is None:
            raise SimulationError("an lgcp scenario needs a Gaussian field spec")
        if self.ground not in ("poisson", "lgcp"):
            raise SimulationError(f"unknown ground process {self.ground!r}")
        if self.mark_rule not in MARK_RULES:
            raise SimulationError(f"unknown mark rule {self.mark_rule!r}; expected one of {MARK_RULES}")

    def with_mark_rule(self, rule: MarkRule) -> "ScenarioSpec":
        return dataclasses.replace(self, mark_rule=rule)

    def streams(self, index: int = 0) -> Dict[str, Tuple[Key, ...]]:
        """Derivation keys of every random stream replicate ``index`` draws from."""
        if self.ground == "poisson":
            ground = {"poisson": ("poisson", index)}
        else:
            ground = {"field": ("field", index), "cox": ("cox", index)}
        return {**ground, "marks": ("marks", index)}

    def simulate_ground(self, seed: int, index: int = 0) -> MarkedPointPattern:
        streams = self.streams(index)
        if self.ground == "poisson":
            return _poisson(self.intensity, self.window, derive_rng(seed, *streams["poisson"]))
        grid = QuadratureGrid(self.window, *self.field_grid)
        field = _gaussian_field(self.field, grid, derive_rng(seed, *streams["field"]))
        return _cox(field, grid, derive_rng(seed, *streams["cox"]))

    def simulate(self, seed: int, index: int = 0) -> MarkedPointPattern:
        """Replicate ``index`` of the scenario.

        The ground pattern depends on ``(seed, index)`` only, so swapping the
        mark rule keeps the same locations.
        """
        ground = self.simulate_ground(seed, index)
        rng = derive_rng(seed, *self.streams(index)["marks"])
        return ground.with_marks(_marks(ground.points, self.mark_rule, rng))

    def expected_intensity(self) -> Expression:
        if self.stated_intensity is not None:
            return self.stated_intensity
        if self.ground == "poisson":
            return self.intensity
        raise SimulationError(f"scenario {self.name!r} states no intensity")

    def describe(self) -> Dict[str, Any]:
        info: Dict[str, Any] = {
            "name": self.name,
            "ground": self.ground,
            "mark_rule": self.mark_rule,
            "window": list(self.window.as_tuple()),
            "test_function": self.test_function,
        }
        if self.intensity is not None:
            info["intensity"] = self.intensity.describe()
        if self.field is not None:
            info["field"] = self.field.describe()
            info["field_grid"] = list(self.field_grid)
        if self.stated_intensity is not None:
            info["stated_intensity"] = self.stated_intensity.describe()
        return info


def _assoc_poisson() -> ScenarioSpec:
    intensity = NamedExpression("assoc-intensity")
    return ScenarioSpec("assoc-poisson", "poisson", "sin-association", intensity=intensity,
                        stated_intensity=intensity, test_function="mm")


def _assoc_lgcp() -> ScenarioSpec:
    field = GaussianFieldSpec(NamedExpression("assoc-lgcp-mean"), CovarianceSpec("exponential", 1.5, 0.12))
    return ScenarioSpec("assoc-lgcp", "lgcp", "sin-association", field=field,
                        stated_intensity=NamedExpression("assoc-lgcp-intensity"), test_function="mm")


def _vario_poisson() -> ScenarioSpec:
    intensity = NamedExpression("vario-intensity")
    return ScenarioSpec("vario-poisson", "poisson", "noisy-amplitude", intensity=intensity,
                        stated_intensity=intensity, test_function="vario")


def _vario_lgcp() -> ScenarioSpec:
    # exp(-100 d^2) is the gaussian kind with scale 1/sqrt(100)
    field = GaussianFieldSpec(NamedExpression("vario-lgcp-mean"), CovarianceSpec("gaussian", 1.0, 0.1))
    return ScenarioSpec("vario-lgcp", "lgcp", "noisy-amplitude", field=field,
                        stated_intensity=NamedExpression("vario-lgcp-intensity"), test_function="vario")


PRESETS: Dict[str, Callable[[], ScenarioSpec]] = {
    "assoc-poisson": _assoc_poisson,
    "assoc-lgcp": _assoc_lgcp,
    "vario-poisson": _vario_poisson,
    "vario-lgcp": _vario_lgcp,
}


def scenario_preset(name: str) -> ScenarioSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise UnknownPresetError(
            f"unknown preset {name!r}; expected one of {sorted(PRESETS)}", {"preset": name}
        ) from None


def stated_intensity(spec: ScenarioSpec) -> Expression:
    return spec.expected_intensity()


def intensity_discrepancy(spec: ScenarioSpec, resolution: int = FIELD_GRID) -> float:
    """Largest relative gap between ``exp(mean + variance / 2)`` and the stated intensity.

    Reported, never used to adjust the scenario. Zero for Poisson scenarios.
    """
    if spec.ground != "lgcp" or spec.stated_intensity is None:
        return 0.0
    grid = QuadratureGrid(spec.window, resolution, resolution)
    x, y = grid.centers[:, 0], grid.centers[:, 1]
    implied = np.exp(spec.field.mean(x, y) + 0.5 * spec.field.covariance.variance)
    stated = spec.stated_intensity(x, y)
    gap = float(np.max(np.abs(implied - stated) / stated))
    logger.info("%s: implied vs stated intensity differ by at most %.3g (relative)", spec.name, gap)
    return gap
