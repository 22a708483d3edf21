import numpy as np
import pytest

from sfcorr.sampler import RngStream


@pytest.fixture
def rng():
    return np.random.default_rng(20251018)


@pytest.fixture
def stream():
    return RngStream(seed=12345)
