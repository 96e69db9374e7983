"""Marked point patterns: the data model, CSV I/O and random labelling."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from ._exceptions import (
    InsufficientPointsError,
    NonFiniteMarkError,
    OutOfWindowError,
    PatternError,
    PatternParseError,
)
from ._io import OutputWriter
from ._random import derive_rng
from .geometry import Window

logger = logging.getLogger(__name__)

COLUMNS = ("x", "y", "mark")


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float)
    values.flags.writeable = False
    return values


@dataclass(frozen=True, eq=False)
class MarkedPointPattern:
    """Points in a rectangular window, one real mark per point."""

    window: Window
    points: np.ndarray
    marks: np.ndarray

    def __post_init__(self):
        points = _frozen(np.asarray(self.points, dtype=float).reshape(-1, 2))
        marks = _frozen(np.asarray(self.marks, dtype=float).ravel())
        if len(points) != len(marks):
            raise PatternError(
                f"{len(points)} points but {len(marks)} marks",
                {"points": len(points), "marks": len(marks)},
            )
        if not np.all(np.isfinite(points)):
            rows = np.flatnonzero(~np.all(np.isfinite(points), axis=1)).tolist()
            raise OutOfWindowError(f"non-finite coordinates at rows {rows}", rows)
        outside = np.flatnonzero(~self.window.contains(points)).tolist()
        if outside:
            raise OutOfWindowError(
                f"{len(outside)} points outside window {self.window.as_tuple()}: rows {outside[:20]}",
                outside,
                {"window": list(self.window.as_tuple())},
            )
        bad_marks = np.flatnonzero(~np.isfinite(marks)).tolist()
        if bad_marks:
            raise NonFiniteMarkError(f"non-finite marks at rows {bad_marks[:20]}", bad_marks)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "marks", marks)
        if len(points) > 1:
            n_unique = len(np.unique(points, axis=0))
            if n_unique < len(points):
                logger.warning("pattern has %d duplicated locations", len(points) - n_unique)

    def __len__(self) -> int:
        return len(self.marks)

    @property
    def n(self) -> int:
        return len(self.marks)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def intensity(self) -> float:
        """Homogeneous intensity estimate ``N / |W|``."""
        return self.n / self.window.area

    def with_marks(self, marks: np.ndarray) -> "MarkedPointPattern":
        return MarkedPointPattern(self.window, self.points, marks)

    def reindexed(self, order: np.ndarray) -> "MarkedPointPattern":
        order = np.asarray(order, dtype=int)
        return MarkedPointPattern(self.window, self.points[order], self.marks[order])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.x, "y": self.y, "mark": self.marks})


@dataclass(frozen=True)
class MarkSummary:
    mean: float
    variance: float


def _require_points(pattern: MarkedPointPattern, minimum: int, what: str):
    if pattern.n < minimum:
        raise InsufficientPointsError(
            f"{what} needs at least {minimum} points, pattern has {pattern.n}",
            {"n": pattern.n, "required": minimum},
        )


def mark_summary(pattern: MarkedPointPattern) -> MarkSummary:
    _require_points(pattern, 2, "mark summary")
    return MarkSummary(
        mean=float(np.mean(pattern.marks)),
        variance=float(np.var(pattern.marks, ddof=1)),
    )


def permute_marks(pattern: MarkedPointPattern, seed: int, *keys) -> MarkedPointPattern:
    """Random labelling: same locations, marks shuffled by a seeded stream."""
    if pattern.n < 2:
        return pattern
    rng = derive_rng(seed, "permute", *keys)
    return pattern.with_marks(rng.permutation(pattern.marks))


def read_pattern(path: Union[str, Path], window: Optional[Window] = None) -> MarkedPointPattern:
    """Read a ``x,y,mark`` CSV; lines starting with ``#`` are comments.

    Without a window, the bounding box of the points is used.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(
            path, comment="#", dtype=str, skip_blank_lines=True, encoding="utf-8",
            keep_default_na=False, na_values=[],
        )
    except pd.errors.EmptyDataError as exc:
        raise PatternParseError(f"{path}: no header line", row=None) from exc
    except (OSError, UnicodeDecodeError) as exc:
        raise PatternParseError(f"{path}: {exc}", row=None) from exc
    except pd.errors.ParserError as exc:
        raise PatternParseError(f"{path}: {exc}", row=None) from exc

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in COLUMNS if c not in frame.columns]
    if missing:
        raise PatternParseError(f"{path}: missing columns {missing}", row=0, details={"columns": list(frame.columns)})

    numeric = {}
    for column in COLUMNS:
        raw = frame[column]
        parsed = pd.to_numeric(raw.str.strip(), errors="coerce")
        if column == "mark":
            # non-finite marks get their own error below
            bad = parsed.isna() & ~raw.str.strip().str.lower().isin(["nan", "inf", "-inf"])
        else:
            bad = ~np.isfinite(parsed.to_numpy(dtype=float))
            bad = pd.Series(bad, index=raw.index)
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0]) + 1
            raise PatternParseError(
                f"{path}: cannot parse {column}={raw[bad].iloc[0]!r} in data row {row}",
                row=row,
                details={"column": column},
            )
        numeric[column] = parsed.to_numpy(dtype=float)

    points = np.column_stack([numeric["x"], numeric["y"]]) if len(frame) else np.zeros((0, 2))
    marks = numeric["mark"]
    bad_marks = np.flatnonzero(~np.isfinite(marks))
    if len(bad_marks):
        rows = (bad_marks + 1).tolist()
        raise NonFiniteMarkError(f"{path}: non-finite marks in data rows {rows[:20]}", rows)
    if window is None:
        window = Window.bounding(points)
        logger.info("no window given for %s; using bounding box %s", path, window.as_tuple())
    outside = np.flatnonzero(~window.contains(points))
    if len(outside):
        rows = (outside + 1).tolist()
        raise OutOfWindowError(
            f"{path}: data rows {rows[:20]} lie outside window {window.as_tuple()}",
            rows,
            {"window": list(window.as_tuple())},
        )
    logger.debug("read %d points from %s", len(marks), path)
    return MarkedPointPattern(window, points, marks)


def write_pattern(pattern: MarkedPointPattern, path: Union[str, Path]) -> Path:
    path = Path(path)
    return OutputWriter(path.parent).write_csv(path.name, pattern.to_frame())
