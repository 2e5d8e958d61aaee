import numpy as np
import pytest

from curvdecay.profiles import make_profile


@pytest.fixture(scope="session")
def zero():
    return make_profile("zero")


@pytest.fixture(scope="session")
def euler2():
    return make_profile("euler", [2.0])


@pytest.fixture(scope="session")
def rational1():
    return make_profile("rational", [1.0])


@pytest.fixture(scope="session")
def rational_half():
    return make_profile("rational", [0.5])


def euler2_h1(t):
    """Closed-form h1 for lambda = 2/(1+t)^2."""
    t = np.asarray(t, dtype=float)
    return ((1 + t) ** 2 - 1 / (1 + t)) / 3


def euler2_h2(t):
    t = np.asarray(t, dtype=float)
    return (1 + t) ** 2 / 3 + 2 / (3 * (1 + t))
