"""Experiment orchestration: checkpointed runs, seed sweeps, slopes, identification."""

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bernstein import BernsteinExplorer
from .dp import expected_gap
from .errors import ArgumentError
from .hard import adversarial_reward, build_hard_mdp, build_packing_set, decode
from .hoeffding import ExploreConfig, HoeffdingExplorer
from .mdp import RewardFunction, load_mdp, random_mdp
from .streams import EVAL, TASK, generator

RESULTS_SCHEMA_VERSION = 1
COLUMNS = ("algorithm", "seed", "K", "gap", "v1", "coverage", "wall_ms", "error")
VALUE_COLUMNS = ("algorithm", "seed", "K", "gap", "v1", "coverage", "error")
ALGORITHMS = ("hoeffding", "bernstein")

BENCHMARK = {"S": 6, "A": 4, "d": 4, "H": 5, "B": 1.0}
BENCHMARK_SEEDS = tuple(range(1, 51))
DEFAULT_CHECKPOINTS = (125, 250, 500, 1000, 2000, 4000)
EVAL_REWARDS = 8


def benchmark_mdp(seed, spec=None):
    """Member ``seed`` of the frozen desk-scale benchmark family."""
    spec = dict(BENCHMARK if spec is None else spec)
    return random_mdp(spec["S"], spec["A"], spec["H"], spec["d"], spec["B"], seed)


def eval_rewards(mdp, seed, n=EVAL_REWARDS):
    """Fixed panel of uniform random rewards used to score a planning phase."""
    H, S, A = mdp.horizon, mdp.num_states, mdp.num_actions
    return [RewardFunction(generator(seed, EVAL, j).random((H, S, A))) for j in range(n)]


def make_explorer(algorithm, mdp, K, config):
    if algorithm == "hoeffding":
        return HoeffdingExplorer(mdp, K, config)
    if algorithm == "bernstein":
        return BernsteinExplorer(mdp, K, config)
    raise ArgumentError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


def planning_state(explorer):
    """The (theta, Sigma, beta) triple the planning phase would use right now."""
    if isinstance(explorer, BernsteinExplorer):
        explorer.finalize()
        return explorer.state.u_stream
    return explorer.state


@dataclass
class RunConfig:
    algorithm: str = "hoeffding"
    seed: int = 1
    checkpoints: tuple = DEFAULT_CHECKPOINTS
    mdp_path: str = None
    benchmark: dict = field(default_factory=lambda: dict(BENCHMARK))
    delta: float = 0.1
    epsilon_target: float = 0.1
    reward_variant: str = "sqrt"
    restarts: int = 8
    lambda_override: float = None
    eval_rewards: int = EVAL_REWARDS
    output_path: str = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ArgumentError(f"algorithm must be one of {ALGORITHMS}")
        if not 0.0 < self.delta < 1.0:
            raise ArgumentError("delta must lie in (0, 1)")
        cps = tuple(int(k) for k in self.checkpoints)
        if not cps or min(cps) < 0:
            raise ArgumentError("checkpoints must be a nonempty list of K >= 0")
        self.checkpoints = tuple(sorted(set(cps)))

    @property
    def K(self):
        return self.checkpoints[-1]

    def explore_config(self):
        return ExploreConfig(
            delta=self.delta, lam=self.lambda_override, reward_variant=self.reward_variant,
            restarts=self.restarts, seed=self.seed, radius_K=self.K, keep_log=False,
        )

    def load(self):
        return load_mdp(self.mdp_path) if self.mdp_path else benchmark_mdp(self.seed, self.benchmark)


def run_cell(config):
    """Run one (algorithm, seed) cell, emitting one row per checkpoint."""
    mdp = config.load()
    rewards = eval_rewards(mdp, config.seed, config.eval_rewards)
    explorer = make_explorer(config.algorithm, mdp, config.K, config.explore_config())
    rows = []
    done = 0
    t0 = time.perf_counter()
    for K in config.checkpoints:
        explorer.run(K - done)
        done = K
        gap = max(expected_gap(mdp, r, explorer.plan_phase(r).policy) for r in rewards)
        st = planning_state(explorer)
        rows.append({
            "algorithm": config.algorithm,
            "seed": config.seed,
            "K": K,
            "gap": gap,
            "v1": explorer.last_v1,
            "coverage": bool(st.confidence_holds(mdp.theta_star)),
            "wall_ms": (time.perf_counter() - t0) * 1e3,
            "error": "",
        })
    return rows


def _safe_cell(config):
    try:
        return run_cell(config)
    except Exception as exc:  # recorded per row; the sweep carries on
        return [{"algorithm": config.algorithm, "seed": config.seed, "K": "", "gap": "", "v1": "",
                 "coverage": "", "wall_ms": "", "error": f"{type(exc).__name__}: {exc}"}]


def default_workers():
    return max(1, int(os.environ.get("RFX_WORKERS", "1")))


def expand_grid(grid):
    """Cells in deterministic (algorithm, seed) order from a grid document."""
    base = {k: v for k, v in grid.items() if k not in ("algorithms", "seeds")}
    return [RunConfig(algorithm=algo, seed=int(seed), **base)
            for algo in grid.get("algorithms", ["hoeffding"]) for seed in grid.get("seeds", [1])]


def grid_hash(grid):
    return hashlib.sha256(json.dumps(grid, sort_keys=True).encode()).hexdigest()


def run_sweep(grid, workers=None):
    cells = expand_grid(grid)
    if not cells:
        raise ArgumentError("grid is empty")
    workers = workers or default_workers()
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_safe_cell, cells))
    else:
        chunks = [_safe_cell(c) for c in cells]
    return [row for chunk in chunks for row in chunk]


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def rows_to_csv(rows, columns=COLUMNS):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_sweep(grid, out_csv, workers=None):
    rows = run_sweep(grid, workers)
    with open(out_csv, "w") as fh:
        fh.write(rows_to_csv(rows))
    manifest = {
        "schema_version": RESULTS_SCHEMA_VERSION,
        "columns": list(COLUMNS),
        "grid": grid,
        "grid_hash": grid_hash(grid),
        "cells": len(expand_grid(grid)),
        "failures": sum(1 for r in rows if r["error"]),
    }
    with open(manifest_path(out_csv), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return rows


def manifest_path(out_csv):
    root, _ = os.path.splitext(out_csv)
    return root + ".manifest.json"


def read_results(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def median_gaps(rows, algorithm=None):
    """``{K: median gap}`` over the rows, optionally for one algorithm."""
    by_k = {}
    for row in rows:
        if row.get("error") or row["gap"] in ("", None):
            continue
        if algorithm and row["algorithm"] != algorithm:
            continue
        by_k.setdefault(int(row["K"]), []).append(float(row["gap"]))
    return {k: float(np.median(v)) for k, v in sorted(by_k.items())}


def slope(rows, algorithm=None):
    """Least-squares slope of log(median gap) against log K."""
    med = {k: g for k, g in median_gaps(rows, algorithm).items() if k > 0}
    if len(med) < 4:
        raise ArgumentError(f"need at least 4 checkpoints with K > 0, got {len(med)}")
    ks = np.array(list(med), dtype=np.float64)
    if ks.max() / ks.min() < 10.0:
        raise ArgumentError("checkpoints must span at least one decade of K")
    gaps = np.array(list(med.values()))
    if np.any(gaps <= 0.0):
        raise ArgumentError("median gap is zero at some checkpoint; the log-log slope is undefined")
    fit = np.polyfit(np.log(ks), np.log(gaps), 1)
    return float(fit[0])


def config_echo(config):
    out = asdict(config)
    out["checkpoints"] = list(config.checkpoints)
    return out


@dataclass
class IdentificationSpec:
    algorithm: str = "hoeffding"
    d_prime: int = 8
    gamma: float = 0.5
    pack_size: int = None
    alpha: float = 0.3
    H: int = 5
    checkpoints: tuple = (50, 5000)
    seeds: tuple = tuple(range(1, 51))
    pack_seed: int = 0
    orientation: str = "s21"
    delta: float = 0.1
    reward_variant: str = "sqrt"


def _identification_cell(args):
    spec, pack, seed = args
    index = int(generator(seed, TASK).integers(len(pack)))
    hard = build_hard_mdp(pack, index, spec.alpha, spec.H)
    K = max(spec.checkpoints)
    cfg = ExploreConfig(delta=spec.delta, reward_variant=spec.reward_variant, seed=seed, radius_K=K, keep_log=False)
    explorer = make_explorer(spec.algorithm, hard.inner, K, cfg)
    reward = adversarial_reward(spec.H, len(pack), spec.orientation)
    rows, done = [], 0
    for k in sorted(spec.checkpoints):
        explorer.run(k - done)
        done = k
        decoded = decode(explorer.plan_phase(reward).policy)
        rows.append({"algorithm": spec.algorithm, "seed": seed, "K": k, "theta_index": index,
                     "decoded": decoded, "recovered": decoded == index})
    return rows


def identification_experiment(spec, workers=None):
    """Recovery frequency of the true hard-instance index from the planned first action."""
    pack = build_packing_set(spec.d_prime, spec.gamma, spec.pack_seed, size=spec.pack_size)
    cells = [(spec, pack, int(s)) for s in spec.seeds]
    workers = workers or default_workers()
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_identification_cell, cells))
    else:
        chunks = [_identification_cell(c) for c in cells]
    rows = [r for chunk in chunks for r in chunk]
    freq = {}
    for k in sorted(spec.checkpoints):
        hits = [r["recovered"] for r in rows if r["K"] == k]
        freq[k] = sum(hits) / len(hits)
    return {"pack_size": len(pack), "frequency": freq, "rows": rows}
