import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.PCG64(20240817))


def fresh_rng(seed):
    return np.random.default_rng(np.random.PCG64(seed))
