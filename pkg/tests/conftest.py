import numpy as np
import pytest

from polardd.jones import named_state


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["H", "D", "R"])
def hdr(request):
    return request.param, named_state(request.param)
