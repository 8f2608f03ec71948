import numpy as np
import pytest

from stripelab.stripes import partial_k, solve_stripe


@pytest.fixture(scope="session")
def sol01():
    return solve_stripe(0.1, 1.0, n_modes=32)


@pytest.fixture(scope="session")
def derivs01(sol01):
    return partial_k(sol01)


@pytest.fixture(scope="session")
def fine_xi():
    return np.linspace(0.0, 2.0 * np.pi, 2049)[:-1]
