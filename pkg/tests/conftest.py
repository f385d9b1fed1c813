import numpy as np
import pytest

from sublap.models import ModelSpace


@pytest.fixture(scope="session")
def E1():
    return ModelSpace.euclidean(1)


@pytest.fixture(scope="session")
def E2():
    return ModelSpace.euclidean(2)


@pytest.fixture(scope="session")
def E3():
    return ModelSpace.euclidean(3)


@pytest.fixture(scope="session")
def H1():
    return ModelSpace.heisenberg()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
