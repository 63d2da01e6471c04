"""Finite linear mixture MDPs.

The transition kernel is ``P(s'|s,a) = <phi(s'|s,a), theta*>`` for a known
feature tensor ``phi`` of shape ``(S, A, S, d)`` and an unknown parameter
``theta*``.  For a value vector ``V`` the aggregated feature is

    psi_V(s, a) = sum_{s'} phi(s'|s,a) V(s')

so that ``[PV](s,a) = <psi_V(s,a), theta*>``.
"""

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ArgumentError, GenerationError, ModelError
from .streams import INSTANCE, generator

SCHEMA_VERSION = 1

ROW_SUM_TOL = 1e-9
PROB_TOL = 1e-12
PSI_TOL = 1e-9
MU_TOL = 1e-12
CLAMP_TOL = 1e-9
SAMPLE_TOL = 1e-6
EXACT_PROBE_MAX_S = 12


@dataclass(frozen=True, eq=False)
class LinearMixtureMDP:
    features: np.ndarray
    theta_star: np.ndarray
    init_dist: np.ndarray
    horizon: int
    param_bound: float

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        theta = np.asarray(self.theta_star, dtype=np.float64).reshape(-1)
        mu = np.asarray(self.init_dist, dtype=np.float64).reshape(-1)
        if features.ndim != 4 or features.shape[0] != features.shape[2]:
            raise ArgumentError(f"features must have shape (S, A, S, d), got {features.shape}")
        if features.shape[3] != theta.shape[0]:
            raise ArgumentError("feature dimension does not match theta_star")
        if mu.shape[0] != features.shape[0]:
            raise ArgumentError("init_dist must have length S")
        if int(self.horizon) < 1:
            raise ArgumentError("horizon must be >= 1")
        for arr in (features, theta, mu):
            arr.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "init_dist", mu)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "param_bound", float(self.param_bound))

    @property
    def num_states(self):
        return self.features.shape[0]

    @property
    def num_actions(self):
        return self.features.shape[1]

    @property
    def dim(self):
        return self.features.shape[3]

    @cached_property
    def psi_matrices(self):
        """Per-(s,a) matrices of shape (d, S) with ``psi_V(s,a) = M[s,a] @ V``."""
        m = np.ascontiguousarray(self.features.transpose(0, 1, 3, 2))
        m.setflags(write=False)
        return m

    @cached_property
    def transitions(self):
        """Model transition tensor ``<phi, theta*>`` of shape (S, A, S), unclamped."""
        p = self.features @ self.theta_star
        p.setflags(write=False)
        return p

    @cached_property
    def _sampling_cdf(self):
        p = self.transitions
        if not np.all(np.isfinite(p)):
            raise ModelError("non-finite transition probabilities")
        worst_neg = float(-p.min())
        worst_sum = float(np.abs(p.sum(axis=2) - 1.0).max())
        if worst_neg > SAMPLE_TOL or worst_sum > SAMPLE_TOL:
            raise ModelError(
                f"transition rows are not distributions (min entry {-worst_neg:.3g}, "
                f"max row-sum error {worst_sum:.3g})"
            )
        clamped = np.where(p < 0.0, 0.0, p)
        clamped = clamped / clamped.sum(axis=2, keepdims=True)
        cdf = np.cumsum(clamped, axis=2)
        cdf[..., -1] = 1.0
        return cdf

    @cached_property
    def _init_cdf(self):
        cdf = np.cumsum(np.clip(self.init_dist, 0.0, None))
        cdf /= cdf[-1]
        cdf[-1] = 1.0
        return cdf

    def check_state_action(self, s, a):
        if not 0 <= s < self.num_states:
            raise ArgumentError(f"state {s} out of range [0, {self.num_states})")
        if not 0 <= a < self.num_actions:
            raise ArgumentError(f"action {a} out of range [0, {self.num_actions})")


@dataclass(frozen=True, eq=False)
class RewardFunction:
    """Deterministic reward ``r_h(s, a)`` stored as an (H, S, A) array in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ArgumentError(f"reward must have shape (H, S, A), got {values.shape}")
        if not np.all(np.isfinite(values)) or values.min(initial=0.0) < 0.0 or values.max(initial=0.0) > 1.0:
            raise ArgumentError("reward entries must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, H, S, A):
        return cls(np.zeros((H, S, A)))


@dataclass(frozen=True, eq=False)
class Policy:
    """Deterministic time-indexed policy; ``actions[h, s]`` for 0-based step ``h``."""

    actions: np.ndarray

    def __post_init__(self):
        actions = np.asarray(self.actions)
        if actions.ndim != 2 or not np.issubdtype(actions.dtype, np.integer):
            raise ArgumentError("policy must be an integer array of shape (H, S)")
        actions = actions.astype(np.int64)
        actions.setflags(write=False)
        object.__setattr__(self, "actions", actions)

    def __eq__(self, other):
        return isinstance(other, Policy) and np.array_equal(self.actions, other.actions)

    __hash__ = None


def as_reward_array(reward, mdp=None):
    values = reward.values if isinstance(reward, RewardFunction) else RewardFunction(reward).values
    if mdp is not None and values.shape != (mdp.horizon, mdp.num_states, mdp.num_actions):
        raise ArgumentError(
            f"reward shape {values.shape} does not match "
            f"(H, S, A) = {(mdp.horizon, mdp.num_states, mdp.num_actions)}"
        )
    return values


def as_policy_array(pi, mdp=None):
    actions = pi.actions if isinstance(pi, Policy) else Policy(pi).actions
    if mdp is not None:
        if actions.shape != (mdp.horizon, mdp.num_states):
            raise ArgumentError(f"policy shape {actions.shape} does not match (H, S)")
        if actions.min(initial=0) < 0 or actions.max(initial=0) >= mdp.num_actions:
            raise ArgumentError("policy contains an invalid action index")
    return actions


def psi(mdp, V, s, a):
    """Aggregated feature ``sum_{s'} phi(s'|s,a) V(s')`` (length d)."""
    mdp.check_state_action(s, a)
    V = np.asarray(V, dtype=np.float64)
    if V.shape != (mdp.num_states,) or not np.all(np.isfinite(V)):
        raise ArgumentError("V must be a finite vector of length S")
    return mdp.psi_matrices[s, a] @ V


def psi_all(mdp, V):
    """``psi_V`` for every (s, a) at once, shape (S, A, d)."""
    return mdp.psi_matrices @ np.asarray(V, dtype=np.float64)


def sample_transition(mdp, s, a, rng):
    """Draw ``s' ~ P(.|s,a)`` by inverting the row CDF with one uniform from ``rng``."""
    mdp.check_state_action(s, a)
    cdf = mdp._sampling_cdf[s, a]
    return min(int(np.searchsorted(cdf, rng.random(), side="right")), mdp.num_states - 1)


def sample_initial_state(mdp, rng):
    cdf = mdp._init_cdf
    return min(int(np.searchsorted(cdf, rng.random(), side="right")), mdp.num_states - 1)


@dataclass(frozen=True)
class Violation:
    kind: str
    location: tuple
    magnitude: float

    def __str__(self):
        return f"{self.kind} at {self.location}: {self.magnitude:.3g}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def kinds(self):
        return {v.kind for v in self.violations}

    def __bool__(self):
        return bool(self.violations)

    def __len__(self):
        return len(self.violations)

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(str(v) for v in self.violations)


def _probe_vectors(S, rng, n_random=256):
    """Vertices of [0,1]^S; the psi-norm is convex in V, so its max over the box sits at one."""
    if S <= EXACT_PROBE_MAX_S:
        return np.array(list(itertools.product((0.0, 1.0), repeat=S)))
    probes = (rng.random((n_random, S)) < 0.5).astype(np.float64)
    return np.vstack([np.ones(S), np.eye(S), 1.0 - np.eye(S), probes])


def validate(mdp, probe_seed=0):
    """Check every linear mixture invariant and report each violation found."""
    report = ValidationReport()
    add = report.violations.append

    for name, arr in (("features", mdp.features), ("theta_star", mdp.theta_star), ("init_dist", mdp.init_dist)):
        bad = np.argwhere(~np.isfinite(arr))
        for idx in bad:
            add(Violation(f"non-finite {name}", tuple(int(i) for i in idx), float("nan")))
    if report.violations:
        return report

    p = mdp.transitions
    row_err = np.abs(p.sum(axis=2) - 1.0)
    for s, a in np.argwhere(row_err > ROW_SUM_TOL):
        add(Violation("row sum", (int(s), int(a)), float(row_err[s, a])))
    for s, a, s2 in np.argwhere(p < -PROB_TOL):
        add(Violation("negative probability", (int(s), int(a), int(s2)), float(-p[s, a, s2])))
    for s, a, s2 in np.argwhere(p > 1.0 + PROB_TOL):
        add(Violation("probability above one", (int(s), int(a), int(s2)), float(p[s, a, s2] - 1.0)))

    norm = float(np.linalg.norm(mdp.theta_star))
    if norm > mdp.param_bound * (1.0 + 1e-12):
        add(Violation("parameter norm above B", (), norm - mdp.param_bound))

    probes = _probe_vectors(mdp.num_states, np.random.default_rng(probe_seed))
    # (S, A, d, S) x (S, n) -> (S, A, d, n)
    norms = np.linalg.norm(mdp.psi_matrices @ probes.T, axis=2)
    worst = norms.max(axis=2)
    for s, a in np.argwhere(worst > 1.0 + PSI_TOL):
        add(Violation("psi norm above one", (int(s), int(a)), float(worst[s, a] - 1.0)))

    mu = mdp.init_dist
    if abs(mu.sum() - 1.0) > MU_TOL:
        add(Violation("init_dist sum", (), float(abs(mu.sum() - 1.0))))
    for (s,) in np.argwhere(mu < 0.0):
        add(Violation("negative init_dist", (int(s),), float(-mu[s])))
    return report


def require_valid(mdp):
    report = validate(mdp)
    if not report.ok:
        raise ModelError(f"invalid linear mixture MDP:\n{report}")
    return mdp


def _random_orthogonal(d, rng):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_mdp(S, A, H, d, B, seed, max_retries=10):
    """Draw a valid linear mixture MDP, deterministically from ``seed``.

    Construction: a baseline distribution ``p(.|s,a)`` plus ``d-1`` zero-mass
    signed measures ``t * p(s') g_i(s')`` with ``E_p[g_i] = 0`` and ``|g_i| <= 1``.
    Choosing ``t^2 * sum_i Var_p(g_i) <= 1`` bounds ``||psi_V||_2`` by one for all
    ``V`` in [0,1]^S.  The parameter is ``(1, w)`` with ``||(1, w)||_2 <= B``, so
    ``B >= 1`` is required (``<psi_1, theta*> = 1`` with ``||psi_1|| <= 1``).  A
    random rotation of the feature space hides the canonical coordinates.
    """
    if min(S, A, H, d) < 1:
        raise ArgumentError("S, A, H, d must be >= 1")
    if not B > 0:
        raise ArgumentError("B must be positive")
    if B < 1.0:
        raise GenerationError("no valid instance exists for B < 1: <psi_1, theta*> = 1 forces ||theta*|| >= 1")

    for attempt in range(max_retries):
        rng = generator(seed, INSTANCE, attempt)
        p = rng.dirichlet(np.ones(S), size=(S, A))
        features = np.empty((S, A, S, d))
        features[..., 0] = p
        theta = np.zeros(d)
        theta[0] = 1.0
        if d > 1:
            g = rng.uniform(-1.0, 1.0, size=(S, A, d - 1, S))
            g -= np.einsum("sak,saik->sai", p, g)[..., None]
            g /= np.maximum(1.0, np.abs(g).max(axis=3, keepdims=True))
            var = np.einsum("sak,saik->sai", p, g**2).sum(axis=2)
            t = 1.0 / np.sqrt(max(var.max(), 1e-300))
            features[..., 1:] = t * (p[:, :, None, :] * g).transpose(0, 1, 3, 2)
            if B > 1.0:
                u = rng.standard_normal(d - 1)
                u /= np.linalg.norm(u)
                cap = min(np.sqrt(B**2 - 1.0), 1.0 / (t * np.abs(u).sum()))
                theta[1:] = rng.uniform(0.0, 1.0) * cap * u
            rot = _random_orthogonal(d, rng)
            features = features @ rot.T
            theta = rot @ theta
        mu = rng.dirichlet(np.ones(S))
        mdp = LinearMixtureMDP(features, theta, mu, H, B)
        if validate(mdp).ok:
            return mdp
    raise GenerationError(f"could not generate a valid instance in {max_retries} attempts")


def mdp_to_dict(mdp):
    return {
        "schema_version": SCHEMA_VERSION,
        "S": mdp.num_states,
        "A": mdp.num_actions,
        "H": mdp.horizon,
        "d": mdp.dim,
        "B": mdp.param_bound,
        "mu": mdp.init_dist.tolist(),
        "theta_star": mdp.theta_star.tolist(),
        "features": mdp.features.tolist(),
    }


def mdp_from_dict(doc):
    try:
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ArgumentError(f"unsupported MDP schema_version {doc.get('schema_version')!r}")
        mdp = LinearMixtureMDP(
            features=np.array(doc["features"], dtype=np.float64),
            theta_star=np.array(doc["theta_star"], dtype=np.float64),
            init_dist=np.array(doc["mu"], dtype=np.float64),
            horizon=int(doc["H"]),
            param_bound=float(doc["B"]),
        )
    except (KeyError, TypeError) as exc:
        raise ArgumentError(f"malformed MDP document: {exc}") from exc
    expected = (doc["S"], doc["A"], doc["S"], doc["d"])
    if mdp.features.shape != tuple(expected):
        raise ArgumentError(f"features shape {mdp.features.shape} does not match header {expected}")
    return mdp


def save_mdp(mdp, path):
    # json writes floats with repr(), which round-trips all 17 significant digits
    with open(path, "w") as fh:
        json.dump(mdp_to_dict(mdp), fh)


def load_mdp(path):
    with open(path) as fh:
        return mdp_from_dict(json.load(fh))
