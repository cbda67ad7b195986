import math

import pytest

from bloch1d import PeriodicPotential, zero_potential


@pytest.fixture(scope="session")
def free_pi():
    return zero_potential(math.pi)


@pytest.fixture(scope="session")
def free_2pi():
    return zero_potential(2.0 * math.pi)


@pytest.fixture(scope="session")
def mathieu():
    # V(x) = 2 cos(x) with period 2 pi
    return PeriodicPotential(2.0 * math.pi, (0.0, 2.0))


@pytest.fixture(scope="session")
def two_harmonic():
    # V(x) = cos(2x) + 0.5 cos(x), period 2 pi
    return PeriodicPotential(2.0 * math.pi, (0.0, 0.5, 1.0))
