import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from thinhomog.profiles import ProfileSpec

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def flat_g():
    return ProfileSpec.constant(1.0)


@pytest.fixture
def flat_h():
    return ProfileSpec.constant(1.0, role="h")


@pytest.fixture
def cos_g():
    return ProfileSpec.cosine(1.0, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
