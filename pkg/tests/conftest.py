import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from surfpoisson.geometry import DomainSpec
from surfpoisson.mesh import generate_mesh, quadrature

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def unit_disk():
    return DomainSpec.disk(1.0)


@pytest.fixture(scope="session")
def disk_mesh(unit_disk):
    return generate_mesh(unit_disk, 0.1)


@pytest.fixture(scope="session")
def fine_disk_mesh(unit_disk):
    return generate_mesh(unit_disk, 0.05)


@pytest.fixture(scope="session")
def q4():
    return quadrature(4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
