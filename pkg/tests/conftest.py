import numpy as np
import pytest

from fliphat.noise import SeedPath


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def root():
    return SeedPath(42)
