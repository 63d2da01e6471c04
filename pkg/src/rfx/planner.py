"""Optimistic backward value iteration with an elliptical exploration bonus."""

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .mdp import Policy, as_reward_array


@dataclass(frozen=True, eq=False)
class PlanResult:
    policy: Policy
    V: np.ndarray
    Q: np.ndarray


def plan(model, theta, cov, reward, beta):
    """Plan against the estimate ``theta`` with bonus ``beta * ||psi_V||_{Sigma^{-1}}``.

    ``model`` needs ``psi_matrices`` (S, A, d, S) and ``horizon``; ``cov`` is a
    CovarianceView (or any object with ``sigma_inv``).  For h = H..1,

        Q_h = clip_[0,H](r_h + <psi_{V_{h+1}}, theta> + beta * ||psi_{V_{h+1}}||_{Sigma^{-1}})

    and the policy is greedy with the lowest action index winning ties.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if not np.all(np.isfinite(theta)):
        raise ArgumentError("theta must be finite")
    if beta < 0:
        raise ArgumentError("beta must be >= 0")
    r = as_reward_array(reward)
    mats = model.psi_matrices
    H = model.horizon
    S, A = mats.shape[:2]
    if r.shape != (H, S, A):
        raise ArgumentError(f"reward shape {r.shape} does not match (H, S, A) = {(H, S, A)}")
    sigma_inv = np.asarray(getattr(cov, "sigma_inv", cov))

    V = np.zeros((H + 1, S))
    Q = np.zeros((H + 1, S, A))
    actions = np.zeros((H, S), dtype=np.int64)
    for h in range(H - 1, -1, -1):
        q = r[h].copy()
        if np.any(V[h + 1]):
            p = mats @ V[h + 1]  # (S, A, d)
            q += p @ theta
            if beta > 0:
                quad = np.einsum("sai,ij,saj->sa", p, sigma_inv, p)
                q += beta * np.sqrt(np.maximum(quad, 0.0))
        Q[h] = np.clip(q, 0.0, H)
        actions[h] = np.argmax(Q[h], axis=1)
        V[h] = Q[h].max(axis=1)
    return PlanResult(Policy(actions), V, Q)
