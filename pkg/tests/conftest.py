import numpy as np
import pytest

from qe3d.fields import AxisField, ConstantField, OscillatorProfile
from qe3d.geometry import CoordChart, DiagonalMetric
from qe3d.presets import preset_space

_SPACE_CACHE = {}


def cached_space(name):
    if name not in _SPACE_CACHE:
        _SPACE_CACHE[name] = preset_space(name)
    return _SPACE_CACHE[name]


@pytest.fixture
def space():
    return cached_space


def round_s3_metric():
    """dχ² + sin²χ dθ² + sin²χ sin²θ dφ² on a box away from the poles."""
    chart = CoordChart(((0.4, 2.6), (0.4, 2.6), (0.0, 6.0)))
    sin_chi = AxisField(OscillatorProfile(-1.0, 0.0, 1.0), 0, 3)
    sin_th = AxisField(OscillatorProfile(-1.0, 0.0, 1.0), 1, 3)
    return DiagonalMetric(chart, (ConstantField(1.0, 3), sin_chi**2, sin_chi**2 * sin_th**2))


def euclidean_metric(dim=3):
    chart = CoordChart(tuple((-1.0, 1.0) for _ in range(dim)))
    return DiagonalMetric(chart, tuple(ConstantField(1.0, dim) for _ in range(dim)))


@pytest.fixture
def s3():
    return round_s3_metric()


@pytest.fixture
def flat():
    return euclidean_metric()


@pytest.fixture
def rng():
    return np.random.default_rng(20241015)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
