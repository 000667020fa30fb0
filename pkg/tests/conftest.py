import numpy as np
import pytest

from torpde.grid import GridSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def spec8():
    return GridSpec(1, 8, 3)


@pytest.fixture
def spec64():
    return GridSpec(1, 64, 31)


@pytest.fixture
def spec128():
    return GridSpec(1, 128, 63)


@pytest.fixture
def spec2d():
    return GridSpec(2, 16, 7)
