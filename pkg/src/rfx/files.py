"""JSON documents for rewards, policies, exploration states and episode logs."""

import json

import numpy as np

from .errors import ArgumentError
from .maximizer import CovarianceView
from .mdp import SCHEMA_VERSION, Policy, RewardFunction


def _read(path):
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        raise ArgumentError(f"{path}: missing or unsupported schema_version")
    return doc


def _write(doc, path):
    with open(path, "w") as fh:
        json.dump({"schema_version": SCHEMA_VERSION, **doc}, fh)


def save_reward(reward, path):
    _write({"values": reward.values.tolist()}, path)


def load_reward(path):
    try:
        return RewardFunction(np.array(_read(path)["values"], dtype=np.float64))
    except KeyError as exc:
        raise ArgumentError(f"{path}: reward document lacks {exc}") from exc


def save_policy(policy, path):
    _write({"actions": policy.actions.tolist()}, path)


def load_policy(path):
    try:
        return Policy(np.array(_read(path)["actions"], dtype=np.int64))
    except KeyError as exc:
        raise ArgumentError(f"{path}: policy document lacks {exc}") from exc


def save_state(state, algorithm, path):
    """Persist the planning triple ``(theta, Sigma, beta)`` of an exploration run."""
    _write({
        "algorithm": algorithm,
        "episodes": state.episode,
        "lambda": state.lam,
        "beta": state.beta,
        "theta": state.theta.tolist(),
        "sigma": state.cov.sigma.tolist(),
    }, path)


class SavedState:
    def __init__(self, doc):
        self.algorithm = doc["algorithm"]
        self.episode = int(doc["episodes"])
        self.lam = float(doc["lambda"])
        self.beta = float(doc["beta"])
        self.theta = np.array(doc["theta"], dtype=np.float64)
        self.cov = CovarianceView(np.array(doc["sigma"], dtype=np.float64))


def load_state(path):
    try:
        return SavedState(_read(path))
    except KeyError as exc:
        raise ArgumentError(f"{path}: state document lacks {exc}") from exc


def episode_lines(log):
    """One JSON object per episode; Bernstein logs also carry the variance weights."""
    for k, ep in enumerate(log.episodes):
        line = {
            "episode": k + 1,
            "states": ep.states.tolist(),
            "actions": ep.actions.tolist(),
            "rewards": ep.rewards.tolist(),
            "targets": ep.targets.tolist(),
            "v1": ep.v1,
        }
        if k < len(log.variance_records):
            line["nu"] = [r.nu for r in log.variance_records[k]]
            line["bar_v"] = [r.bar_v for r in log.variance_records[k]]
            line["correction"] = [r.correction for r in log.variance_records[k]]
        yield json.dumps(line)
