import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import config  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(config.DEFAULT_SEED)


@pytest.fixture
def make_rng():
    def factory(seed: int = config.DEFAULT_SEED):
        return np.random.default_rng(seed)

    return factory
