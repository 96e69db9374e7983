import numpy as np
import pytest

from inhom_markcorr.geometry import Window
from inhom_markcorr.pattern import MarkedPointPattern


def random_pattern(seed: int, n: int, window: Window = None, marks: str = "uniform") -> MarkedPointPattern:
    window = window or Window.unit()
    rng = np.random.default_rng(seed)
    x = rng.uniform(window.xmin, window.xmax, n)
    y = rng.uniform(window.ymin, window.ymax, n)
    values = rng.uniform(0.0, 1.0, n) if marks == "uniform" else rng.normal(5.0, 2.0, n)
    return MarkedPointPattern(window, np.column_stack([x, y]), values)


@pytest.fixture
def unit():
    return Window.unit()


@pytest.fixture
def five_points(unit):
    points = [[0.1, 0.2], [0.3, 0.25], [0.5, 0.5], [0.62, 0.4], [0.8, 0.75]]
    return MarkedPointPattern(unit, points, [1.0, 2.0, 0.5, 3.0, 1.5])


@pytest.fixture
def small_patterns():
    """Fifty random patterns with 5 to 20 points."""
    return [random_pattern(seed, 5 + seed % 16) for seed in range(50)]


@pytest.fixture
def sample_csv(tmp_path):
    path = tmp_path / "pattern.csv"
    path.write_text("# three trees\nx,y,mark\n0.1,0.2,1.5\n0.4,0.9,2.0\n0.75,0.5,0.25\n", encoding="utf-8")
    return path


@pytest.fixture
def make_pattern():
    return random_pattern
