import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stable_gft.graph_io import RandomGraphSpec, erdos_renyi

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_dense(rng, n, density=0.4, complex_=False):
    A = (rng.random((n, n)) < density) * rng.standard_normal((n, n))
    if complex_:
        A = A + 1j * (A != 0) * rng.standard_normal((n, n))
    return A


@pytest.fixture
def er30():
    """Fifty directed ER shifts, n = 30, p = 0.1."""
    spec = RandomGraphSpec(30, 0.1, False, seed=1000)
    return [erdos_renyi(spec.for_trial(t)) for t in range(50)]
