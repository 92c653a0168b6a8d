import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from deckrec.engine.cards import generate_card_pool

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def pool10():
    return generate_card_pool(7, 10)


@pytest.fixture(scope="session")
def pool40():
    return generate_card_pool(7, 40)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
