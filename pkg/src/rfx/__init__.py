"""Reward-free exploration for linear mixture MDPs."""

from .bernstein import BernsteinExplorer, bernstein_radii, plan_phase_plus, run_exploration_plus
from .dp import expected_gap, optimal_values, policy_value, variance
from .env import Environment
from .errors import (
    ArgumentError,
    ConstructionError,
    GenerationError,
    ModelError,
    RFXError,
    StateError,
)
from .hard import adversarial_reward, build_hard_mdp, build_packing_set
from .hoeffding import ExploreConfig, HoeffdingExplorer, hoeffding_beta, plan_phase, run_exploration
from .maximizer import CovarianceView, maximize_exact, maximize_l1_ascent
from .mdp import LinearMixtureMDP, Policy, RewardFunction, load_mdp, psi, random_mdp, save_mdp, validate
from .planner import plan

__version__ = "0.1.0"
