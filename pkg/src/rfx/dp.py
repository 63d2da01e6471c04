"""Exact finite-horizon dynamic programming on a known linear mixture MDP."""

from dataclasses import dataclass

import numpy as np

from .mdp import Policy, as_policy_array, as_reward_array

VARIANCE_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class ValueTables:
    """``V[h]`` and ``Q[h]`` for 0-based step ``h``; row ``H`` is the all-zero terminal row."""

    V: np.ndarray
    Q: np.ndarray


def optimal_values(mdp, reward):
    r = as_reward_array(reward, mdp)
    H, S, A = r.shape
    P = mdp.transitions
    V = np.zeros((H + 1, S))
    Q = np.zeros((H + 1, S, A))
    actions = np.zeros((H, S), dtype=np.int64)
    for h in range(H - 1, -1, -1):
        Q[h] = r[h] + P @ V[h + 1]
        actions[h] = np.argmax(Q[h], axis=1)  # first maximiser = lowest index
        V[h] = Q[h].max(axis=1)
    return ValueTables(V, Q), Policy(actions)


def policy_value(mdp, reward, pi):
    r = as_reward_array(reward, mdp)
    actions = as_policy_array(pi, mdp)
    H, S, _ = r.shape
    P = mdp.transitions
    V = np.zeros((H + 1, S))
    Q = np.zeros((H + 1, S, r.shape[2]))
    idx = np.arange(S)
    for h in range(H - 1, -1, -1):
        Q[h] = r[h] + P @ V[h + 1]
        V[h] = Q[h][idx, actions[h]]
    return ValueTables(V, Q)


def variance(mdp, f, s, a):
    """Variance of ``f(s')`` under ``s' ~ P(.|s,a)``, clamped at zero."""
    mdp.check_state_action(s, a)
    f = np.asarray(f, dtype=np.float64)
    row = mdp.transitions[s, a]
    mean = row @ f
    return max(float(row @ (f * f) - mean * mean), 0.0)


def expected_gap(mdp, reward, pi):
    """``E_{s ~ mu}[V*_1(s) - V^pi_1(s)]`` computed exactly."""
    opt, _ = optimal_values(mdp, reward)
    val = policy_value(mdp, reward, pi)
    return float(mdp.init_dist @ (opt.V[0] - val.V[0]))


def state_gaps(mdp, reward, pi):
    opt, _ = optimal_values(mdp, reward)
    val = policy_value(mdp, reward, pi)
    return opt.V[0] - val.V[0]
