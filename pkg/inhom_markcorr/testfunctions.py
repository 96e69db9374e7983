"""Test functions ``tf(m1, m2)`` and their normalising constants."""

from abc import ABC, abstractmethod
from typing import Callable, Dict, Union

import numpy as np

from ._exceptions import EstimationError, ZeroNormalizerError
from ._types import CurveKind
from .pattern import MarkedPointPattern, mark_summary


class TestFunction(ABC):
    """Nonnegative symmetric map of two marks, with the constant that normalises it.

    Subclasses work elementwise on arrays of marks.
    """

    __test__ = False  # keep pytest from collecting the class by its name

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @property
    def curve_kind(self) -> CurveKind:
        return "kappa"

    @abstractmethod
    def __call__(self, m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def normalizer(self, pattern: MarkedPointPattern) -> float:
        """Empirical value of the test function under mark independence."""
        pass

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"


class ProductTestFunction(TestFunction):
    """``m1 * m2``, normalised by the squared mark mean."""

    name = "mm"

    def __call__(self, m1, m2):
        return np.asarray(m1, dtype=float) * np.asarray(m2, dtype=float)

    def normalizer(self, pattern):
        mean = mark_summary(pattern).mean
        if mean == 0.0:
            raise ZeroNormalizerError("mark mean is zero; mm correlation is undefined", {"mean": mean})
        return mean * mean


class VariogramTestFunction(TestFunction):
    """``(m1 - m2)^2 / 2``, normalised by the mark variance."""

    name = "vario"

    @property
    def curve_kind(self) -> CurveKind:
        return "gamma"

    def __call__(self, m1, m2):
        diff = np.asarray(m1, dtype=float) - np.asarray(m2, dtype=float)
        return 0.5 * diff * diff

    def normalizer(self, pattern):
        variance = mark_summary(pattern).variance
        # constant marks can leave a rounding residue in the variance
        if np.ptp(pattern.marks) == 0.0 or variance == 0.0:
            raise ZeroNormalizerError("marks are constant; mark variogram is undefined", {"variance": variance})
        return variance


class CustomTestFunction(TestFunction):
    """User-supplied test function with a fixed normalising constant."""

    def __init__(self, name: str, func: Callable[[np.ndarray, np.ndarray], np.ndarray], constant: float):
        if not constant > 0:
            raise ZeroNormalizerError(f"normalising constant must be positive, got {constant}")
        self._name = name
        self.func = func
        self.constant = float(constant)

    @property
    def name(self) -> str:
        return self._name

    def __call__(self, m1, m2):
        return np.asarray(self.func(np.asarray(m1, dtype=float), np.asarray(m2, dtype=float)), dtype=float)

    def normalizer(self, pattern):
        return self.constant


BUILTINS: Dict[str, TestFunction] = {
    "mm": ProductTestFunction(),
    "vario": VariogramTestFunction(),
}


def get_test_function(tf: Union[str, TestFunction]) -> TestFunction:
    if isinstance(tf, TestFunction):
        return tf
    try:
        return BUILTINS[tf]
    except KeyError:
        raise EstimationError(f"unknown test function {tf!r}; built-ins are {sorted(BUILTINS)}") from None


class UnitTestFunction(TestFunction):
    """``tf ≡ 1``: turns a mark-weighted pair sum into the plain one."""

    name = "one"

    def __call__(self, m1, m2):
        return np.ones(np.broadcast(np.asarray(m1), np.asarray(m2)).shape)

    def normalizer(self, pattern):
        return 1.0
