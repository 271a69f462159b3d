import numpy as np
import pytest

from bridgefactor.mathcore import make_rng


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def normal_sample(rng):
    return rng.normal(0.4, 1.3, 30)


@pytest.fixture
def positive_sample(rng):
    return rng.exponential(4.0, 25)


@pytest.fixture(scope="session")
def four_points():
    return np.array([1.0, -1.0, 2.0, 0.0])
