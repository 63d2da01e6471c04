"""Learner-facing view of a linear mixture MDP.

Exploration code receives an :class:`Environment`: the known feature map plus a
transition sampler.  The true parameter and any reward are not reachable
through it.
"""

from .mdp import require_valid, sample_initial_state, sample_transition


class Environment:
    def __init__(self, mdp, validate=True):
        if validate:
            require_valid(mdp)
        self.__mdp = mdp
        self.features = mdp.features
        self.psi_matrices = mdp.psi_matrices
        self.horizon = mdp.horizon
        self.num_states = mdp.num_states
        self.num_actions = mdp.num_actions
        self.dim = mdp.dim
        self.param_bound = mdp.param_bound

    def reset(self, rng):
        return sample_initial_state(self.__mdp, rng)

    def step(self, s, a, rng):
        return sample_transition(self.__mdp, s, a, rng)


def as_environment(env_or_mdp):
    if isinstance(env_or_mdp, Environment):
        return env_or_mdp
    return Environment(env_or_mdp)

