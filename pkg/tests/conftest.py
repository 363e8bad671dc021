import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from artifact import lattice as lat

settings.register_profile(
    "artifact",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("artifact")


def rand_herm(n, rng, scale=1.0):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (X + X.conj().T)


def rand_antisym(n, rng, scale=1.0):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (X - X.T)


def rand_complex(n, rng, scale=1.0):
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid4():
    return lat.build_grid(4, 1, 2 * np.pi)


@pytest.fixture
def grid8():
    return lat.build_grid(8, 1, 2 * np.pi)
