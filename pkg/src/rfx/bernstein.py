"""UCRL-RFE+: exploration with variance-weighted value-targeted regression.

Three regression streams run side by side:

* ``u``     -- unweighted ridge regression on pseudo-value targets, used only
               by the final planning phase;
* ``hat``   -- ridge regression on ``V_{h+1}(s')`` weighted by ``1/nu``, used to
               plan during exploration;
* ``tilde`` -- ridge regression on ``V_{h+1}(s')^2``, feeding the variance
               estimate.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .env import as_environment
from .errors import ArgumentError, StateError
from .hoeffding import (
    EpisodeRecord,
    ExplorationLog,
    ExplorationState,
    ExploreConfig,
    _radius,
    default_lambda,
    exploration_reward_table,
)
from .maximizer import CovarianceView, max_uncertainty_all
from .planner import plan
from .streams import EXPLORE, MAXIMIZER, generator


class Radii(NamedTuple):
    beta: float
    hat_beta: float
    check_beta: float
    tilde_beta: float


def bernstein_radii(d, K, H, B, delta):
    if not 0.0 < delta < 1.0:
        raise ArgumentError("delta must lie in (0, 1)")
    if min(d, K, H, B) <= 0:
        raise ArgumentError("d, K, H, B must be positive")
    l1 = math.log(1.0 + K * H * B**2)
    l2 = math.log(48.0 * K**2 * H**2 / delta)
    root = math.sqrt(l1 * l2)
    return Radii(
        beta=_radius(d, K, H, B, delta, 12.0),
        hat_beta=8.0 * math.sqrt(d) * root + 4.0 * math.sqrt(d) * l2 + 1.0,
        check_beta=8.0 * d * root + 4.0 * math.sqrt(d) * l2 + 1.0,
        tilde_beta=8.0 * H**2 * math.sqrt(d) * root + 4.0 * H**2 * l2 + 1.0,
    )


class RegressionStream:
    """``(Sigma, b, theta)`` triple plus the episode-start inverse ``Sigma_{1,k}^{-1}``."""

    def __init__(self, d, lam):
        self.cov = CovarianceView.identity(d, lam)
        self.b = np.zeros(d)
        self.theta = np.zeros(d)
        self.start_inv = self.cov.sigma_inv.copy()

    def add(self, x, y):
        self.cov.update(x)
        self.b += x * y

    def close(self):
        self.theta = self.cov.sigma_inv @ self.b
        self.start_inv = self.cov.sigma_inv.copy()

    def start_norm(self, x):
        return math.sqrt(max(float(x @ self.start_inv @ x), 0.0))

    def copy(self):
        out = RegressionStream.__new__(RegressionStream)
        out.cov, out.b, out.theta, out.start_inv = self.cov.copy(), self.b.copy(), self.theta.copy(), self.start_inv.copy()
        return out


@dataclass
class VarianceRecord:
    bar_v: float
    correction: float
    nu: float
    sigma_bar: float


@dataclass
class BernsteinState:
    u_stream: ExplorationState
    hat_stream: RegressionStream
    tilde_stream: RegressionStream
    radii: Radii
    alpha_floor: float
    horizon: int
    psi_matrices: np.ndarray = field(repr=False)
    finalized: bool = False

    @property
    def lam(self):
        return self.u_stream.lam

    def inject(self, theta_star, streams=("hat", "tilde")):
        """Overwrite stream estimates with the true parameter (test hook)."""
        theta_star = np.asarray(theta_star, dtype=np.float64)
        for name in streams:
            if name == "u":
                self.u_stream.theta = theta_star.copy()
            else:
                getattr(self, f"{name}_stream").theta = theta_star.copy()

    def copy(self):
        return BernsteinState(self.u_stream.copy(), self.hat_stream.copy(), self.tilde_stream.copy(),
                              self.radii, self.alpha_floor, self.horizon, self.psi_matrices, self.finalized)


def variance_estimate(state, V_next, s, a):
    """``clip_[0,H^2](<psi_{V^2}, theta~>) - clip_[0,H](<psi_V, theta^>)^2``; may be negative."""
    H = state.horizon
    V_next = np.asarray(V_next, dtype=np.float64)
    M = state.psi_matrices[s, a]
    second = min(max(float(M @ (V_next**2) @ state.tilde_stream.theta), 0.0), H**2)
    first = min(max(float(M @ V_next @ state.hat_stream.theta), 0.0), H)
    return second - first**2


def correction_term(state, V_next, s, a):
    H = state.horizon
    V_next = np.asarray(V_next, dtype=np.float64)
    M = state.psi_matrices[s, a]
    r = state.radii
    t1 = min(H**2, r.tilde_beta * state.tilde_stream.start_norm(M @ (V_next**2)))
    t2 = min(H**2, 2.0 * H * r.check_beta * state.hat_stream.start_norm(M @ V_next))
    return t1 + t2


def nu(state, V_next, s, a):
    bar_v = variance_estimate(state, V_next, s, a)
    corr = correction_term(state, V_next, s, a)
    value = max(state.alpha_floor, bar_v + corr)
    return VarianceRecord(bar_v, corr, value, math.sqrt(value))


class BernsteinExplorer:
    def __init__(self, env, K, config=None):
        self.env = as_environment(env)
        self.config = config or ExploreConfig()
        cfg = self.config
        if K < 0:
            raise ArgumentError("K must be >= 0")
        self.K = K
        B, d, H = self.env.param_bound, self.env.dim, self.env.horizon
        lam = cfg.lam if cfg.lam is not None else default_lambda(B)
        radii = bernstein_radii(d, max(cfg.radius_K or K, 1), H, B, cfg.delta)
        if cfg.beta is not None:
            radii = radii._replace(beta=cfg.beta)
        u_stream = ExplorationState(CovarianceView.identity(d, lam), np.zeros(d), np.zeros(d), 0, lam, radii.beta)
        self.state = BernsteinState(
            u_stream, RegressionStream(d, lam), RegressionStream(d, lam), radii, H**2 / d, H, self.env.psi_matrices
        )
        self.log = ExplorationLog()
        self.last_v1 = float("nan")
        self.last_plan = self.last_rewards = None  # the most recent episode's PLAN output and reward table

    def _uncertainty(self, cov, k):
        cfg = self.config
        method = cfg.maximizer
        if method == "auto":
            method = "exact" if self.env.num_states <= cfg.exact_cap else "l1"
        rng = generator(cfg.seed, MAXIMIZER, k) if method == "l1" else None
        return max_uncertainty_all(self.env.psi_matrices, cov.inv_sqrt, method, cfg.restarts, rng, cfg.exact_cap)

    def run_episode(self):
        st, env, cfg = self.state, self.env, self.config
        ust, hat, tilde = st.u_stream, st.hat_stream, st.tilde_stream
        H, mats = env.horizon, env.psi_matrices
        k = ust.episode + 1
        m_unit, f_unit = self._uncertainty(ust.cov, k)
        rewards = exploration_reward_table(m_unit, H, st.radii.beta, cfg.reward_variant)
        result = plan(env, hat.theta, hat.start_inv, rewards, st.radii.hat_beta)

        rng = generator(cfg.seed, EXPLORE, k)
        s = env.reset(rng)
        states, actions = [s], []
        u_rows, targets, used, records = [], [], [], []
        for h in range(1, H + 1):
            a = int(result.policy.actions[h - 1, s])
            s_next = env.step(s, a, rng)
            u = (H - h) * f_unit[s, a]
            V_next = result.V[h]
            rec = nu(st, V_next, s, a)

            x_u = mats[s, a] @ u
            ust.cov.update(x_u)
            ust.b += x_u * u[s_next]
            x_hat = mats[s, a] @ V_next
            hat.add(x_hat / rec.sigma_bar, V_next[s_next] / rec.sigma_bar)
            tilde.add(mats[s, a] @ (V_next**2), V_next[s_next] ** 2)

            actions.append(a)
            states.append(s_next)
            u_rows.append(u)
            targets.append(u[s_next])
            used.append(rewards[h - 1, s, a])
            records.append(rec)
            s = s_next
        hat.close()
        tilde.close()
        ust.theta = ust.cov.sigma_inv @ ust.b
        ust.episode = k
        self.last_v1 = float(result.V[0, states[0]])
        self.last_plan, self.last_rewards = result, rewards
        if cfg.keep_log:
            self.log.episodes.append(
                EpisodeRecord(states[0], np.array(states), np.array(actions), np.array(used),
                              np.array(u_rows), np.array(targets), self.last_v1, result.V[1:].copy())
            )
            self.log.variance_records.append(records)

    def run(self, n):
        for _ in range(n):
            self.run_episode()
        return self

    def finalize(self):
        """Set ``theta_{K+1}`` from the pseudo-value stream."""
        ust = self.state.u_stream
        ust.theta = ust.cov.sigma_inv @ ust.b
        self.state.finalized = True
        return self.state

    def plan_phase(self, reward, beta=None):
        return plan_phase_plus(self.finalize(), reward, self.env, beta)


def run_exploration_plus(env, K, config=None):
    explorer = BernsteinExplorer(env, K, config).run(K)
    return explorer.finalize(), explorer.log


def plan_phase_plus(state, reward, env, beta=None):
    if not state.finalized:
        raise StateError("exploration state is not finalized; call finalize() first")
    ust = state.u_stream
    return plan(env, ust.theta, ust.cov, reward, state.radii.beta if beta is None else beta)


def replay_streams(env, log, lam):
    """Rebuild all three Gram matrices from a Bernstein log, independently of the run."""
    d = env.dim
    sig_u, sig_hat, sig_tilde = (lam * np.eye(d) for _ in range(3))
    for ep, records in zip(log.episodes, log.variance_records):
        for h, (s, a) in enumerate(zip(ep.states[:-1], ep.actions)):
            M = env.psi_matrices[s, a]
            x = M @ ep.u[h]
            sig_u += np.outer(x, x)
            x = M @ ep.next_values[h]
            sig_hat += np.outer(x, x) / records[h].nu
            x = M @ ep.next_values[h] ** 2
            sig_tilde += np.outer(x, x)
    return {"u": sig_u, "hat": sig_hat, "tilde": sig_tilde}
