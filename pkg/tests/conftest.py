import numpy as np
import pytest

from rfx.mdp import LinearMixtureMDP, random_mdp


@pytest.fixture
def small_mdp():
    return random_mdp(4, 3, 3, 3, 1.0, seed=7)


@pytest.fixture
def bench_mdp():
    return random_mdp(6, 4, 5, 4, 1.0, seed=1)


def tabular_mdp(P, H, mu=None):
    """d = 1 model whose single feature is the transition row itself."""
    P = np.asarray(P, dtype=np.float64)
    S = P.shape[0]
    mu = np.full(S, 1.0 / S) if mu is None else mu
    return LinearMixtureMDP(P[..., None], np.array([1.0]), mu, H, 1.0)
