"""Command-line entry point: ``rfx <subcommand> ...``.

Exit codes: 0 success, 2 bad arguments, 3 I/O failure, 4 invalid model.
"""

import argparse
import json
import sys

from .dp import expected_gap, state_gaps
from .env import Environment
from .errors import ArgumentError, RFXError
from .files import episode_lines, load_policy, load_reward, load_state, save_policy, save_reward, save_state
from .hard import adversarial_reward, build_hard_mdp, build_packing_set
from .harness import (
    ALGORITHMS,
    BENCHMARK,
    DEFAULT_CHECKPOINTS,
    IdentificationSpec,
    RunConfig,
    benchmark_mdp,
    config_echo,
    default_workers,
    identification_experiment,
    make_explorer,
    median_gaps,
    planning_state,
    read_results,
    rows_to_csv,
    slope,
    write_sweep,
)
from .mdp import load_mdp, random_mdp, require_valid, save_mdp
from .planner import plan

EXIT_IO = 3


def _int_list(text):
    """``"1-5"`` or ``"1,2,7"`` or a mix of both."""
    out = []
    try:
        for part in text.split(","):
            if "-" in part.strip()[1:]:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            elif part.strip():
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers like 1,2,5 or 1-50, got {text!r}") from None
    return out


def _emit(doc):
    print(json.dumps(doc, indent=2, sort_keys=True))


def _load_model(args):
    if args.mdp:
        mdp = load_mdp(args.mdp)
        require_valid(mdp)
        return mdp
    return benchmark_mdp(args.seed)


def cmd_gen_mdp(args):
    mdp = random_mdp(args.S, args.A, args.H, args.d, args.B, args.seed)
    save_mdp(mdp, args.out)
    _emit({"out": args.out, "S": args.S, "A": args.A, "H": args.H, "d": args.d, "B": args.B, "seed": args.seed})


def cmd_gen_hard(args):
    pack = build_packing_set(args.d_prime, args.gamma, args.seed, size=args.pack_size)
    hard = build_hard_mdp(pack, args.index, args.alpha, args.H)
    save_mdp(hard.inner, args.out)
    if args.reward_out:
        save_reward(adversarial_reward(args.H, len(pack), args.orientation), args.reward_out)
    _emit({"out": args.out, "pack_size": len(pack), "theta_index": args.index, "alpha": args.alpha,
           "max_inner": pack.max_inner() if len(pack) > 1 else None})


def _explore_config(args):
    return RunConfig(
        algorithm=args.algo, seed=args.seed, checkpoints=(args.K,), mdp_path=args.mdp, delta=args.delta,
        reward_variant=args.reward_variant, restarts=args.restarts, lambda_override=args.lam,
    )


def cmd_explore(args):
    cfg = _explore_config(args)
    mdp = _load_model(args)
    explore_cfg = cfg.explore_config()
    explore_cfg.keep_log = bool(args.log)
    explorer = make_explorer(args.algo, Environment(mdp), args.K, explore_cfg).run(args.K)
    state = planning_state(explorer)
    save_state(state, args.algo, args.out)
    if args.log:
        with open(args.log, "w") as fh:
            for line in episode_lines(explorer.log):
                fh.write(line + "\n")
    _emit({"out": args.out, "episodes": args.K, "beta": state.beta, "last_v1": explorer.last_v1,
           "config": config_echo(cfg)})


def cmd_plan(args):
    mdp = load_mdp(args.mdp)
    state = load_state(args.state)
    env = Environment(mdp)
    reward = load_reward(args.reward)
    beta = state.beta if args.beta is None else args.beta
    result = plan(env, state.theta, state.cov, reward, beta)
    save_policy(result.policy, args.out)
    _emit({"out": args.out, "beta": beta, "V1": result.V[0].tolist()})


def cmd_eval(args):
    mdp = load_mdp(args.mdp)
    require_valid(mdp)
    policy = load_policy(args.policy)
    reward = load_reward(args.reward)
    _emit({"gap": expected_gap(mdp, reward, policy), "state_gaps": state_gaps(mdp, reward, policy).tolist()})


def cmd_sweep(args):
    if args.grid:
        with open(args.grid) as fh:
            grid = json.load(fh)
    else:
        grid = {
            "algorithms": args.algo or list(ALGORITHMS),
            "seeds": args.seeds,
            "checkpoints": args.checkpoints,
            "delta": args.delta,
            "reward_variant": args.reward_variant,
            "restarts": args.restarts,
        }
        if args.lam is not None:
            grid["lambda_override"] = args.lam
        if args.mdp:
            grid["mdp_path"] = args.mdp
    rows = write_sweep(grid, args.out, args.workers)
    failures = [r for r in rows if r["error"]]
    _emit({"out": args.out, "rows": len(rows), "failures": len(failures)})


def cmd_slope(args):
    rows = read_results(args.results)
    algos = [args.algo] if args.algo else sorted({r["algorithm"] for r in rows})
    out = {}
    for algo in algos:
        out[algo] = {"slope": slope(rows, algo), "median_gap": median_gaps(rows, algo)}
    _emit(out)


def cmd_lower_bound(args):
    spec = IdentificationSpec(
        algorithm=args.algo, d_prime=args.d_prime, gamma=args.gamma, pack_size=args.pack_size, alpha=args.alpha,
        H=args.H, checkpoints=tuple(args.checkpoints), seeds=tuple(args.seeds), pack_seed=args.pack_seed,
        orientation=args.orientation, delta=args.delta, reward_variant=args.reward_variant,
    )
    report = identification_experiment(spec, args.workers)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rows_to_csv(report["rows"], ("algorithm", "seed", "K", "theta_index", "decoded", "recovered")))
    _emit({"pack_size": report["pack_size"], "frequency": report["frequency"]})


def _common(p, many_algos=False):
    if many_algos:
        p.add_argument("--algo", choices=ALGORITHMS, nargs="+", default=None, help="default: all")
    else:
        p.add_argument("--algo", choices=ALGORITHMS, default="hoeffding")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--reward-variant", choices=("sqrt", "linear"), default="sqrt")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--lambda", dest="lam", type=float, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="rfx", description="Reward-free exploration in linear mixture MDPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-mdp", help="generate a random valid linear mixture MDP")
    p.add_argument("--S", type=int, default=BENCHMARK["S"])
    p.add_argument("--A", type=int, default=BENCHMARK["A"])
    p.add_argument("--d", type=int, default=BENCHMARK["d"])
    p.add_argument("--H", type=int, default=BENCHMARK["H"])
    p.add_argument("--B", type=float, default=BENCHMARK["B"])
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_mdp)

    p = sub.add_parser("gen-hard", help="build a lower-bound instance")
    p.add_argument("--d-prime", type=int, default=8)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--pack-size", type=int, default=None)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--H", type=int, default=5)
    p.add_argument("--seed", type=int, default=0, help="packing-set seed")
    p.add_argument("--orientation", choices=("s21", "s22"), default="s21")
    p.add_argument("--reward-out", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_hard)

    p = sub.add_parser("explore", help="run the exploration phase and save the planning state")
    _common(p)
    p.add_argument("--mdp", default=None, help="MDP file; default is benchmark member --seed")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--log", default=None, help="write one JSON line per episode")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("plan", help="plan for a reward from a saved exploration state")
    p.add_argument("--mdp", required=True, help="source of the known features")
    p.add_argument("--state", required=True)
    p.add_argument("--reward", required=True)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("eval", help="exact suboptimality gap of a policy")
    p.add_argument("--mdp", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--reward", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run an (algorithm, seed) grid with checkpoints")
    _common(p, many_algos=True)
    p.add_argument("--seeds", type=_int_list, default=[1])
    p.add_argument("--checkpoints", type=_int_list, default=list(DEFAULT_CHECKPOINTS))
    p.add_argument("--mdp", default=None)
    p.add_argument("--grid", default=None, help="JSON grid document; overrides the grid flags")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("slope", help="log-log slope of median gap against K")
    p.add_argument("results")
    p.add_argument("--algo", choices=ALGORITHMS, default=None)
    p.set_defaults(func=cmd_slope)

    p = sub.add_parser("lower-bound-exp", help="parameter identification on hard instances")
    _common(p)
    p.add_argument("--d-prime", type=int, default=8)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--pack-size", type=int, default=None)
    p.add_argument("--pack-seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--H", type=int, default=5)
    p.add_argument("--orientation", choices=("s21", "s22"), default="s21")
    p.add_argument("--checkpoints", type=_int_list, default=[50, 5000])
    p.add_argument("--seeds", type=_int_list, default=list(range(1, 51)))
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_lower_bound)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "workers") and args.workers is None:
        try:
            args.workers = default_workers()
        except ValueError:
            print("rfx: RFX_WORKERS must be an integer", file=sys.stderr)
            return 2
    try:
        args.func(args)
    except RFXError as exc:
        print(f"rfx: {exc}", file=sys.stderr)
        return exc.exit_code
    except json.JSONDecodeError as exc:
        print(f"rfx: malformed JSON: {exc}", file=sys.stderr)
        return ArgumentError.exit_code
    except OSError as exc:
        print(f"rfx: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
