"""UCRL-RFE: reward-free exploration with a Hoeffding-type confidence set.

Each episode builds an exploration reward from the maximal transition
uncertainty at every (s, a), plans optimistically against the current
estimate, rolls the plan out, and regresses on pseudo-value targets ``u``
chosen to maximise ``||psi_u(s,a)||_{Sigma^{-1}}`` at the visited pairs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .env import as_environment
from .errors import ArgumentError
from .maximizer import EXACT_CAP, CovarianceView, max_uncertainty_all
from .planner import plan
from .streams import EXPLORE, MAXIMIZER, generator

REWARD_VARIANTS = ("sqrt", "linear")


@dataclass
class ExploreConfig:
    delta: float = 0.1
    lam: float = None  # None -> B^-2
    reward_variant: str = "sqrt"
    restarts: int = 8
    maximizer: str = "auto"  # auto | exact | l1
    exact_cap: int = EXACT_CAP
    seed: int = 0
    beta: float = None  # None -> theoretical radius
    radius_K: int = None  # episode budget used inside the radius formulas; None -> K
    keep_log: bool = True

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ArgumentError("delta must lie in (0, 1)")
        if self.reward_variant not in REWARD_VARIANTS:
            raise ArgumentError(f"reward_variant must be one of {REWARD_VARIANTS}")
        if self.restarts < 1:
            raise ArgumentError("restarts must be >= 1")
        if self.lam is not None and not self.lam > 0:
            raise ArgumentError("lambda must be positive")


def _radius(d, K, H, B, delta, inner):
    return H * math.sqrt(d * math.log(inner * (1.0 + K * H**3 * B**2) / delta)) + 1.0


def hoeffding_beta(d, K, H, B, delta):
    """``H sqrt(d log(3 (1 + K H^3 B^2) / delta)) + 1``."""
    if not 0.0 < delta < 1.0:
        raise ArgumentError("delta must lie in (0, 1)")
    if min(d, K, H, B) <= 0:
        raise ArgumentError("d, K, H, B must be positive")
    return _radius(d, K, H, B, delta, 3.0)


def default_lambda(B):
    return B ** -2.0


@dataclass
class ExplorationState:
    cov: CovarianceView
    b: np.ndarray
    theta: np.ndarray
    episode: int
    lam: float
    beta: float

    def copy(self):
        return ExplorationState(self.cov.copy(), self.b.copy(), self.theta.copy(), self.episode, self.lam, self.beta)

    def confidence_holds(self, theta_star):
        """Whether ``||theta* - theta||_Sigma <= beta`` for the current (theta, Sigma)."""
        diff = np.asarray(theta_star) - self.theta
        return float(np.sqrt(diff @ self.cov.sigma @ diff)) <= self.beta


@dataclass
class EpisodeRecord:
    initial_state: int
    states: np.ndarray  # length H+1
    actions: np.ndarray  # length H
    rewards: np.ndarray  # exploration reward at each visited (s_h, a_h)
    u: np.ndarray  # (H, S) pseudo-value functions
    targets: np.ndarray  # u_h(s_{h+1})
    v1: float
    next_values: np.ndarray = None  # (H, S) plan values V_{h+1}; Bernstein runs only

    @property
    def transitions(self):
        return list(zip(self.states[:-1].tolist(), self.actions.tolist(), self.states[1:].tolist()))


@dataclass
class ExplorationLog:
    episodes: list = field(default_factory=list)
    variance_records: list = field(default_factory=list)

    def __len__(self):
        return len(self.episodes)


def exploration_reward_table(m_unit, H, beta, variant):
    """Rewards for all (h, s, a) from unit-box uncertainties ``m_unit`` (S, A).

    On the box [0, H-h] the maximal uncertainty is ``(H-h) * m_unit``; the reward is
    ``min(1, 2 beta/H * sqrt(m))`` (variant ``sqrt``) or ``min(1, 2 beta/H * m)``.
    """
    boxes = (H - np.arange(1, H + 1, dtype=np.float64))[:, None, None]
    m = boxes * m_unit[None]
    core = np.sqrt(m) if variant == "sqrt" else m
    return np.minimum(1.0, (2.0 * beta / H) * core)


def exploration_reward(env, state, h, s, a, variant="sqrt", restarts=8, rng=None):
    """Exploration reward at 1-based step ``h`` for one pair, from scratch."""
    H = env.horizon
    if not 1 <= h <= H:
        raise ArgumentError(f"step h={h} outside [1, {H}]")
    mats = env.psi_matrices[s : s + 1, a : a + 1]
    m_unit, _ = max_uncertainty_all(mats, state.cov.inv_sqrt, restarts=restarts, rng=rng)
    return float(exploration_reward_table(m_unit, H, state.beta, variant)[h - 1, 0, 0])


class HoeffdingExplorer:
    """Stateful UCRL-RFE run; call :meth:`run` repeatedly for anytime checkpoints."""

    def __init__(self, env, K, config=None):
        self.env = as_environment(env)
        self.config = config or ExploreConfig()
        cfg = self.config
        if K < 0:
            raise ArgumentError("K must be >= 0")
        self.K = K
        B = self.env.param_bound
        d, H = self.env.dim, self.env.horizon
        lam = cfg.lam if cfg.lam is not None else default_lambda(B)
        beta = cfg.beta if cfg.beta is not None else hoeffding_beta(d, max(cfg.radius_K or K, 1), H, B, cfg.delta)
        self.state = ExplorationState(CovarianceView.identity(d, lam), np.zeros(d), np.zeros(d), 0, lam, beta)
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
        H, mats = env.horizon, env.psi_matrices
        k = st.episode + 1
        m_unit, f_unit = self._uncertainty(st.cov, k)
        rewards = exploration_reward_table(m_unit, H, st.beta, cfg.reward_variant)
        result = plan(env, st.theta, st.cov, rewards, st.beta)

        rng = generator(cfg.seed, EXPLORE, k)
        s = env.reset(rng)
        states, actions = [s], []
        u_rows, targets, used = [], [], []
        for h in range(1, H + 1):
            a = int(result.policy.actions[h - 1, s])
            s_next = env.step(s, a, rng)
            u = (H - h) * f_unit[s, a]
            x = mats[s, a] @ u
            st.cov.update(x)
            st.b += x * u[s_next]
            actions.append(a)
            states.append(s_next)
            u_rows.append(u)
            targets.append(u[s_next])
            used.append(rewards[h - 1, s, a])
            s = s_next
        st.theta = st.cov.sigma_inv @ st.b
        st.episode = k
        self.last_v1 = float(result.V[0, states[0]])
        self.last_plan, self.last_rewards = result, rewards
        if cfg.keep_log:
            self.log.episodes.append(
                EpisodeRecord(states[0], np.array(states), np.array(actions), np.array(used),
                              np.array(u_rows), np.array(targets), self.last_v1)
            )

    def run(self, n):
        for _ in range(n):
            self.run_episode()
        return self

    def plan_phase(self, reward, beta=None):
        return plan_phase(self.state, reward, self.env, beta)


def run_exploration(env, K, config=None):
    explorer = HoeffdingExplorer(env, K, config).run(K)
    return explorer.state, explorer.log


def plan_phase(state, reward, env, beta=None):
    """Plan for ``reward`` from the exploration data alone."""
    return plan(env, state.theta, state.cov, reward, state.beta if beta is None else beta)


def replay_covariance(env, log, lam):
    """Rebuild ``lam I + sum psi_u psi_u^T`` from a log, independently of the run."""
    d = env.dim
    sigma = lam * np.eye(d)
    for ep in log.episodes:
        for h, (s, a) in enumerate(zip(ep.states[:-1], ep.actions)):
            x = env.psi_matrices[s, a] @ ep.u[h]
            sigma += np.outer(x, x)
    return sigma
