import numpy as np
import pytest

from rfx.dp import optimal_values
from rfx.errors import ArgumentError
from rfx.maximizer import CovarianceView
from rfx.mdp import LinearMixtureMDP, RewardFunction, random_mdp
from rfx.planner import plan


def random_cov(rng, d):
    L = rng.normal(size=(d, d))
    return CovarianceView(L @ L.T + 0.1 * np.eye(d))


def test_zero_bonus_true_parameter_matches_oracle(small_mdp):
    rng = np.random.default_rng(0)
    for _ in range(20):
        r = rng.random((3, 4, 3))
        res = plan(small_mdp, small_mdp.theta_star, random_cov(rng, 3), r, 0.0)
        tables, pi = optimal_values(small_mdp, r)
        np.testing.assert_allclose(res.V, tables.V, atol=1e-10)
        np.testing.assert_allclose(res.Q, tables.Q, atol=1e-10)
        assert res.policy == pi


def test_all_zero(small_mdp):
    res = plan(small_mdp, np.zeros(3), CovarianceView.identity(3, 1.0), RewardFunction.zeros(3, 4, 3), 0.0)
    assert not res.V.any() and not res.Q.any() and not res.policy.actions.any()


def test_single_state_scalar_recursion():
    H, beta = 6, 2.0
    mdp = LinearMixtureMDP(np.ones((1, 1, 1, 1)), np.array([1.0]), np.array([1.0]), H, 1.0)
    res = plan(mdp, np.zeros(1), CovarianceView.identity(1, 1.0), np.ones((H, 1, 1)), beta)
    v = 0.0
    expected = [0.0]
    for _ in range(H):
        v = min(float(H), max(0.0, 1.0 + beta * abs(v)))
        expected.append(v)
    np.testing.assert_allclose(res.V[:, 0], expected[::-1], atol=1e-15)


def test_rejects_non_finite_theta(small_mdp):
    with pytest.raises(ArgumentError):
        plan(small_mdp, np.array([np.nan, 0, 0]), CovarianceView.identity(3, 1.0), RewardFunction.zeros(3, 4, 3), 1.0)


def test_optimism_when_confidence_event_holds():
    rng = np.random.default_rng(1)
    checked = 0
    for seed in range(40):
        mdp = random_mdp(5, 3, 4, 3, 1.0, seed)
        cov = random_cov(rng, 3)
        theta = mdp.theta_star + rng.normal(size=3) * 0.3
        diff = theta - mdp.theta_star
        beta = float(np.sqrt(diff @ cov.sigma @ diff)) * (1 + rng.random())
        r = rng.random((4, 5, 3))
        res = plan(mdp, theta, cov, r, beta)
        tables, _ = optimal_values(mdp, r)
        assert np.all(res.V[0] >= tables.V[0] - 1e-10)
        checked += 1
    assert checked == 40


def test_bonus_monotone_and_clipped(small_mdp):
    rng = np.random.default_rng(2)
    cov = random_cov(rng, 3)
    r = rng.random((3, 4, 3))
    theta = rng.normal(size=3)
    prev = None
    for beta in (0.0, 0.1, 0.5, 2.0, 50.0):
        res = plan(small_mdp, theta, cov, r, beta)
        assert res.V.min() >= 0.0 and res.V.max() <= 3.0
        assert res.Q.min() >= 0.0 and res.Q.max() <= 3.0
        np.testing.assert_array_equal(res.V[:3], res.Q[:3].max(axis=2))
        if prev is not None:
            assert np.all(res.V >= prev - 1e-12)
        prev = res.V
