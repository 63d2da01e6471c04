import math

import numpy as np
import pytest

from rfx.dp import expected_gap
from rfx.env import Environment
from rfx.errors import ArgumentError
from rfx.harness import eval_rewards
from rfx.hoeffding import (
    ExplorationState,
    ExploreConfig,
    HoeffdingExplorer,
    _radius,
    default_lambda,
    exploration_reward,
    hoeffding_beta,
    plan_phase,
    replay_covariance,
    run_exploration,
)
from rfx.maximizer import CovarianceView
from rfx.mdp import RewardFunction, random_mdp


def test_beta_formula():
    expected = 2.0 * math.sqrt(1.0 * math.log(3.0 * (1.0 + 1 * 2**3 * 1.0) / 0.6)) + 1.0
    assert hoeffding_beta(1, 1, 2, 1.0, 0.6) == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(2.0 * math.sqrt(math.log(45.0)) + 1.0, rel=1e-15)


def test_beta_monotone_in_K():
    assert hoeffding_beta(3, 100, 4, 1.0, 0.1) >= hoeffding_beta(3, 1, 4, 1.0, 0.1)


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.2, 1.5])
def test_beta_rejects_bad_delta(delta):
    with pytest.raises(ArgumentError):
        hoeffding_beta(2, 10, 3, 1.0, delta)


def test_lambda_default():
    assert default_lambda(2.0) == 0.25


def test_radius_constant_identity():
    assert _radius(3, 50, 4, 1.0, 0.1, 3.0) == hoeffding_beta(3, 50, 4, 1.0, 0.1)


def _state(d, lam, beta):
    return ExplorationState(CovarianceView.identity(d, lam), np.zeros(d), np.zeros(d), 0, lam, beta)


def test_reward_zero_at_last_step(bench_mdp):
    env = Environment(bench_mdp)
    st = _state(4, 1.0, 10.0)
    assert exploration_reward(env, st, 5, 0, 0) == 0.0


def test_reward_vanishes_with_huge_lambda(bench_mdp):
    env = Environment(bench_mdp)
    st = _state(4, 1e12, 1.0)
    assert exploration_reward(env, st, 1, 2, 1, "linear") < 1e-5
    assert exploration_reward(env, st, 1, 2, 1, "sqrt") < 1e-2


def test_reward_clips_to_one(bench_mdp):
    env = Environment(bench_mdp)
    st = _state(4, 1.0, 1000.0)
    assert exploration_reward(env, st, 1, 0, 0) == 1.0


def test_reward_variants_differ_only_by_root(bench_mdp):
    env = Environment(bench_mdp)
    st = _state(4, 1.0, 0.05)
    lin = exploration_reward(env, st, 2, 1, 1, "linear")
    sq = exploration_reward(env, st, 2, 1, 1, "sqrt")
    m = lin * 5 / (2 * 0.05)
    assert sq == pytest.approx((2 * 0.05 / 5) * math.sqrt(m), rel=1e-12)


def test_zero_episodes(bench_mdp):
    state, log = run_exploration(bench_mdp, 0, ExploreConfig(seed=1))
    assert not state.theta.any()
    np.testing.assert_array_equal(state.cov.sigma, np.eye(4))
    assert len(log) == 0


def test_scalar_parameter_is_learned():
    for seed in (1, 2, 3):
        mdp = random_mdp(4, 2, 3, 1, 1.0, seed=seed)
        state, _ = run_exploration(mdp, 2000, ExploreConfig(seed=seed))
        assert abs(state.theta[0] - 1.0) <= 0.05


def test_deterministic_logs(bench_mdp):
    _, a = run_exploration(bench_mdp, 30, ExploreConfig(seed=4))
    _, b = run_exploration(bench_mdp, 30, ExploreConfig(seed=4))
    for x, y in zip(a.episodes, b.episodes):
        assert x.states.tobytes() == y.states.tobytes()
        assert x.u.tobytes() == y.u.tobytes()
        assert x.rewards.tobytes() == y.rewards.tobytes()
        assert x.v1 == y.v1


def test_l1_maximizer_runs_deterministically(bench_mdp):
    cfg = dict(seed=2, maximizer="l1", restarts=3)
    s1, _ = run_exploration(bench_mdp, 20, ExploreConfig(**cfg))
    s2, _ = run_exploration(bench_mdp, 20, ExploreConfig(**cfg))
    assert s1.theta.tobytes() == s2.theta.tobytes()


def test_log_shapes_and_covariance_replay(bench_mdp):
    env = Environment(bench_mdp)
    state, log = run_exploration(env, 60, ExploreConfig(seed=3))
    for ep in log.episodes:
        assert len(ep.actions) == 5 and len(ep.states) == 6 and len(ep.transitions) == 5
        assert np.all((0 <= ep.rewards) & (ep.rewards <= 1))
    replay = replay_covariance(env, log, state.lam)
    assert np.linalg.norm(replay - state.cov.sigma) <= 1e-8
    np.testing.assert_allclose(state.theta, state.cov.sigma_inv @ state.b, atol=1e-15)


def test_environment_hides_parameter(bench_mdp):
    env = Environment(bench_mdp)
    assert not any("theta" in name or "transition" in name for name in vars(env) if not name.startswith("_Environment"))


def test_plan_phase_zero_reward_and_repeatability(bench_mdp):
    env = Environment(bench_mdp)
    state, _ = run_exploration(env, 40, ExploreConfig(seed=5))
    zero = RewardFunction.zeros(5, 6, 4)
    res = plan_phase(state, zero, env)
    assert expected_gap(bench_mdp, zero, res.policy) == 0.0
    r = np.random.default_rng(0).random((5, 6, 4))
    a, b = plan_phase(state, r, env), plan_phase(state, r, env)
    assert a.V.tobytes() == b.V.tobytes() and a.policy == b.policy


def test_gap_shrinks_on_scalar_benchmark():
    early, late = [], []
    for seed in range(1, 21):
        mdp = random_mdp(4, 2, 3, 1, 1.0, seed=seed)
        rewards = eval_rewards(mdp, seed, 4)
        explorer = HoeffdingExplorer(mdp, 2000, ExploreConfig(seed=seed, keep_log=False))
        explorer.run(50)
        early.append(max(expected_gap(mdp, r, explorer.plan_phase(r).policy) for r in rewards))
        explorer.run(1950)
        late.append(max(expected_gap(mdp, r, explorer.plan_phase(r).policy) for r in rewards))
    assert np.median(late) <= np.median(early)
