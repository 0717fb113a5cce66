import numpy as np
import pytest

from fairmeans.dataset import PointSet


@pytest.fixture
def line_four() -> PointSet:
    """Four collinear points with one far outlier; the standard hand fixture."""
    return PointSet(np.array([[0.0], [1.0], [2.0], [100.0]]))


@pytest.fixture
def gen() -> np.random.Generator:
    return np.random.default_rng(20260815)
