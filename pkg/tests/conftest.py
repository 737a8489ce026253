import numpy as np
import pytest

from difflab.population import bimodal, standard_normal


@pytest.fixture
def gauss():
    return standard_normal(1)


@pytest.fixture
def bimix():
    return bimodal(1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
