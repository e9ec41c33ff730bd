import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from beltrami.field import Grid
from beltrami.transforms import SpectralPlan

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid256():
    return Grid(256, 4.0)


@pytest.fixture(scope="session")
def plan256(grid256):
    return SpectralPlan(grid256)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
