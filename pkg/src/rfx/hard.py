"""Three-state hard instances behind the sample-complexity lower bound.

State 0 is the start state S_1; states 1 and 2 are the absorbing states
S_{2,1} and S_{2,2}.  Actions are indexed by a packing set of sign vectors
``a_j`` in {-1,+1}^{d'} and the parameter is ``theta_i = (sqrt 2, alpha x_i / sqrt d')``
for one packing vector ``x_i``, giving

    P(S_{2,1} | S_1, a_j) = 1/2 + alpha / (sqrt(2) d') <x_i, a_j>.

The feature dimension is ``d = d' + 1``; ``d'`` is used in every normalisation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ConstructionError
from .mdp import LinearMixtureMDP, RewardFunction, validate
from .streams import INSTANCE, generator

S1, S21, S22 = 0, 1, 2
ORIENTATIONS = ("s21", "s22")


@dataclass(frozen=True, eq=False)
class PackingSet:
    dim: int
    gamma: float
    vectors: np.ndarray  # (M, d') entries in {-1, +1}

    def __len__(self):
        return len(self.vectors)

    def max_inner(self):
        if len(self.vectors) < 2:
            return -math.inf
        G = self.vectors @ self.vectors.T
        np.fill_diagonal(G, -np.inf)
        return float(G.max())

    def verify(self):
        """Exhaustive pairwise check of ``<x, x'> <= d' gamma``."""
        bound = self.dim * self.gamma
        for i in range(len(self.vectors)):
            for j in range(i + 1, len(self.vectors)):
                if float(self.vectors[i] @ self.vectors[j]) > bound:
                    return False
        return True


def packing_target(d_prime, gamma):
    """``ceil(exp(d' gamma^2 / 4)) - 1``, at least one."""
    return max(1, math.ceil(math.exp(d_prime * gamma**2 / 4.0)) - 1)


def build_packing_set(d_prime, gamma=0.5, seed=0, max_attempts=100_000, size=None):
    """Rejection-sample sign vectors until ``size`` (default: the packing target) are kept."""
    if d_prime < 1:
        raise ArgumentError("d_prime must be >= 1")
    if not 0.0 < gamma < 1.0:
        raise ArgumentError("gamma must lie in (0, 1)")
    target = packing_target(d_prime, gamma) if size is None else int(size)
    bound = d_prime * gamma
    rng = generator(seed, INSTANCE, d_prime)
    kept = []
    for _ in range(max_attempts):
        if len(kept) == target:
            break
        x = np.where(rng.random(d_prime) < 0.5, -1.0, 1.0)
        if all(float(x @ y) <= bound for y in kept):
            kept.append(x)
    if len(kept) < target:
        raise ConstructionError(
            f"packing set reached {len(kept)} of {target} vectors after {max_attempts} attempts"
        )
    pack = PackingSet(d_prime, float(gamma), np.array(kept).reshape(target, d_prime))
    if not pack.verify():
        raise ConstructionError("packing set failed pairwise verification")
    return pack


@dataclass(frozen=True, eq=False)
class HardMDP:
    inner: LinearMixtureMDP
    theta_index: int
    alpha_scale: float
    pack: PackingSet


def hard_theta(pack, theta_index, alpha):
    return np.concatenate([[math.sqrt(2.0)], alpha * pack.vectors[theta_index] / math.sqrt(pack.dim)])


def hard_features(pack):
    dp = pack.dim
    A = len(pack)
    phi = np.zeros((3, A, 3, dp + 1))
    head = math.sqrt(2.0) / 4.0
    tails = pack.vectors / math.sqrt(2.0 * dp)
    phi[S1, :, S21, 0] = head
    phi[S1, :, S21, 1:] = tails
    phi[S1, :, S22, 0] = head
    phi[S1, :, S22, 1:] = -tails
    phi[S21, :, S21, 0] = 1.0 / math.sqrt(2.0)
    phi[S22, :, S22, 0] = 1.0 / math.sqrt(2.0)
    return phi


def build_hard_mdp(pack, theta_index, alpha_scale, H):
    if not 0 <= theta_index < len(pack):
        raise ArgumentError(f"theta_index {theta_index} out of range")
    if alpha_scale < 0 or alpha_scale / math.sqrt(2.0) > 0.5 + 1e-15:
        raise ConstructionError("alpha_scale must satisfy 0 <= alpha/sqrt(2) <= 1/2")
    theta = hard_theta(pack, theta_index, alpha_scale)
    mdp = LinearMixtureMDP(
        hard_features(pack), theta, np.array([1.0, 0.0, 0.0]), H, math.sqrt(2.0 + alpha_scale**2)
    )
    p = mdp.transitions
    if p.min() < -1e-12 or p.max() > 1.0 + 1e-12:
        raise ConstructionError("hard instance produced a probability outside [0, 1]")
    report = validate(mdp)
    if not report.ok:
        raise ConstructionError(f"hard instance failed validation:\n{report}")
    return HardMDP(mdp, int(theta_index), float(alpha_scale), pack)


def adversarial_reward(H, num_actions, orientation="s21"):
    """Reward 1 on one absorbing state at every step, 0 elsewhere.

    ``orientation="s22"`` puts the reward on S_{2,2}; the optimal first action then
    minimises ``<x_i, a_j>``.  ``"s21"`` rewards S_{2,1}, whose optimal first action
    is ``a_i`` itself, which is what the identification decoder relies on.
    """
    if H < 2:
        raise ArgumentError("H must be >= 2")
    if orientation not in ORIENTATIONS:
        raise ArgumentError(f"orientation must be one of {ORIENTATIONS}")
    r = np.zeros((H, 3, num_actions))
    r[:, S21 if orientation == "s21" else S22, :] = 1.0
    return RewardFunction(r)


def decode(policy):
    """Parameter index read off the first-step action at S_1."""
    return int(policy.actions[0, S1])
