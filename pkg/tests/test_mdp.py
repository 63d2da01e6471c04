import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rfx.errors import ArgumentError, GenerationError, ModelError
from rfx.hard import build_hard_mdp, build_packing_set
from rfx.mdp import (
    LinearMixtureMDP,
    load_mdp,
    psi,
    random_mdp,
    sample_transition,
    save_mdp,
    validate,
)
from rfx.streams import generator

from conftest import tabular_mdp


def brute_psi(features, V, s, a):
    S, _, _, d = features.shape
    out = [0.0] * d
    for s2 in range(S):
        for i in range(d):
            out[i] += features[s, a, s2, i] * V[s2]
    return np.array(out)


def test_psi_of_zero_is_zero(small_mdp):
    np.testing.assert_array_equal(psi(small_mdp, np.zeros(4), 1, 2), np.zeros(3))


def test_psi_of_ones_has_unit_expectation(small_mdp):
    for s in range(4):
        for a in range(3):
            assert psi(small_mdp, np.ones(4), s, a) @ small_mdp.theta_star == pytest.approx(1.0, abs=1e-12)


def test_psi_matches_triple_loop():
    rng = np.random.default_rng(3)
    features = rng.normal(size=(3, 1, 3, 2))
    mdp = LinearMixtureMDP(features, np.array([0.3, -0.2]), np.ones(3) / 3, 2, 10.0)
    V = rng.random(3)
    for s in range(3):
        np.testing.assert_allclose(psi(mdp, V, s, 0), brute_psi(features, V, s, 0), rtol=0, atol=1e-14)


def test_psi_rejects_bad_index(small_mdp):
    with pytest.raises(ArgumentError):
        psi(small_mdp, np.zeros(4), 4, 0)
    with pytest.raises(ArgumentError):
        psi(small_mdp, np.zeros(4), 0, -1)


def test_expectation_identity(small_mdp):
    rng = np.random.default_rng(0)
    P = small_mdp.transitions
    for _ in range(50):
        V = rng.random(4)
        for s in range(4):
            for a in range(3):
                lhs = sum(P[s, a, s2] * V[s2] for s2 in range(4))
                assert abs(lhs - psi(small_mdp, V, s, a) @ small_mdp.theta_star) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=4, max_size=4),
    st.lists(st.floats(-5, 5), min_size=4, max_size=4),
    st.floats(-3, 3),
    st.floats(-3, 3),
)
def test_psi_is_linear(v, w, alpha, beta):
    mdp = random_mdp(4, 3, 3, 3, 1.0, seed=7)
    v, w = np.array(v), np.array(w)
    lhs = psi(mdp, alpha * v + beta * w, 2, 1)
    rhs = alpha * psi(mdp, v, 2, 1) + beta * psi(mdp, w, 2, 1)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_sample_point_mass():
    P = np.zeros((2, 1, 2))
    P[:, :, 0] = 1.0
    mdp = tabular_mdp(P, 2)
    rng = generator(1)
    assert all(sample_transition(mdp, 1, 0, rng) == 0 for _ in range(200))


def test_hard_instance_transition_probability():
    pack = build_packing_set(6, 0.5, seed=0, size=3)
    alpha = 0.3
    hard = build_hard_mdp(pack, 1, alpha, 3)
    assert hard.inner.transitions[0, 1, 1] == pytest.approx(0.5 + alpha / math.sqrt(2), abs=1e-12)


def test_sample_frequencies_within_binomial_ci(small_mdp):
    n = 100_000
    rng = generator(11)
    s, a = 2, 1
    draws = np.array([sample_transition(small_mdp, s, a, rng) for _ in range(n)])
    freq = np.bincount(draws, minlength=4) / n
    p = small_mdp.transitions[s, a]
    sd = np.sqrt(p * (1 - p) / n)
    assert np.all(np.abs(freq - p) <= 3 * sd + 1e-12)
    assert 0.5 * np.abs(freq - p).sum() <= 0.02


def test_sample_rejects_broken_rows():
    P = np.full((2, 1, 2), 0.7)
    mdp = tabular_mdp(P, 2)
    with pytest.raises(ModelError):
        sample_transition(mdp, 0, 0, generator(0))


def test_validate_accepts_random_instance(small_mdp):
    assert validate(small_mdp).ok


def test_validate_reports_row_sum_after_scaling(small_mdp):
    scaled = LinearMixtureMDP(small_mdp.features, 2 * small_mdp.theta_star, small_mdp.init_dist, 3, 5.0)
    report = validate(scaled)
    rows = [v for v in report.violations if v.kind == "row sum"]
    assert len(rows) == 12
    assert all(v.magnitude == pytest.approx(1.0, abs=1e-9) for v in rows)


def test_validate_reports_nan(small_mdp):
    features = small_mdp.features.copy()
    features[0, 0, 0, 0] = np.nan
    report = validate(LinearMixtureMDP(features, small_mdp.theta_star, small_mdp.init_dist, 3, 1.0))
    assert "non-finite features" in report.kinds()


def test_random_mdp_is_deterministic():
    a = random_mdp(5, 3, 4, 3, 1.5, seed=42)
    b = random_mdp(5, 3, 4, 3, 1.5, seed=42)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.theta_star.tobytes() == b.theta_star.tobytes()
    assert a.init_dist.tobytes() == b.init_dist.tobytes()


@pytest.mark.parametrize("B", [1.0, 2.0])
def test_random_mdp_valid_for_many_seeds(B):
    for seed in range(100):
        assert validate(random_mdp(5, 3, 3, 4, B, seed)).ok


def test_random_mdp_one_dimensional():
    mdp = random_mdp(4, 2, 3, 1, 1.0, seed=5)
    np.testing.assert_array_equal(mdp.theta_star, [1.0])
    np.testing.assert_allclose(mdp.features[..., 0], mdp.transitions)
    np.testing.assert_allclose(mdp.transitions.sum(axis=2), 1.0, atol=1e-12)


def test_random_mdp_refuses_small_bound():
    with pytest.raises(GenerationError):
        random_mdp(3, 2, 2, 2, 0.5, seed=0)


def test_json_round_trip_is_exact(tmp_path, small_mdp):
    path = tmp_path / "m.json"
    save_mdp(small_mdp, path)
    back = load_mdp(path)
    assert back.features.tobytes() == small_mdp.features.tobytes()
    assert back.theta_star.tobytes() == small_mdp.theta_star.tobytes()
    assert back.init_dist.tobytes() == small_mdp.init_dist.tobytes()
    assert (back.horizon, back.param_bound) == (small_mdp.horizon, small_mdp.param_bound)
